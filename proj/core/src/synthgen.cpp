#include "mbridge/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mbridge::synth {
namespace {

std::vector<double> gaussian_direction(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(d));
  do {
    for (double& x : v) x = normal(rng);
  } while (!normalize_in_place(v));
  return v;
}

ModalityDataset sample_modality(std::mt19937_64& rng, const SynthSpec& spec, const Matrix& bases,
                                const std::vector<double>& offset, Modality modality) {
  const auto per = static_cast<std::size_t>(spec.per_identity_per_modality);
  const auto ids = static_cast<std::size_t>(spec.n_identities);
  const auto d = static_cast<std::size_t>(spec.d);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix rows(ids * per, d);
  std::vector<int> truth(ids * per);
  for (std::size_t c = 0; c < ids; ++c) {
    for (std::size_t k = 0; k < per; ++k) {
      const std::size_t r = c * per + k;
      auto row = rows.row(r);
      for (std::size_t j = 0; j < d; ++j) {
        row[j] = bases(c, j) + offset[j] + spec.intra_sigma * noise(rng);
      }
      if (!normalize_in_place(row)) {
        throw Error("generated a zero-norm sample; reduce modality_shift_norm");
      }
      truth[r] = static_cast<int>(c);
    }
  }
  return {FeatureMatrix(std::move(rows), true), modality, std::move(truth)};
}

}  // namespace

void SynthSpec::validate() const {
  if (n_identities < 2) throw Error("n_identities must be >= 2");
  if (per_identity_per_modality < 2) throw Error("per_identity_per_modality must be >= 2");
  if (d < 1) throw Error("d must be >= 1");
  if (!(intra_sigma >= 0.0)) throw Error("intra_sigma must be non-negative");
  if (!(modality_shift_norm >= 0.0)) throw Error("modality_shift_norm must be non-negative");
  if (!(noise_frac >= 0.0 && noise_frac < 1.0)) throw Error("noise_frac must lie in [0, 1)");
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const auto d = static_cast<std::size_t>(spec.d);

  Matrix bases(static_cast<std::size_t>(spec.n_identities), d);
  for (std::size_t c = 0; c < bases.rows(); ++c) {
    const auto dir = gaussian_direction(rng, spec.d);
    std::copy(dir.begin(), dir.end(), bases.row(c).begin());
  }

  // Infrared offset is Gram-Schmidt orthogonalised against the visible one
  // whenever d allows it.
  std::vector<double> off_v = gaussian_direction(rng, spec.d);
  std::vector<double> off_r = gaussian_direction(rng, spec.d);
  if (d > 1) {
    const double proj = dot(off_r, off_v);
    for (std::size_t j = 0; j < d; ++j) off_r[j] -= proj * off_v[j];
    if (!normalize_in_place(off_r)) off_r = off_v;
  }
  for (double& x : off_v) x *= spec.modality_shift_norm;
  for (double& x : off_r) x *= spec.modality_shift_norm;

  ModalityDataset vis = sample_modality(rng, spec, bases, off_v, Modality::visible);
  ModalityDataset ir = sample_modality(rng, spec, bases, off_r, Modality::infrared);
  return {std::move(vis), std::move(ir), std::move(bases)};
}

Corruption corrupt_labels(const std::vector<int>& truth, double noise_frac, int n_classes,
                          std::uint64_t seed) {
  if (!(noise_frac >= 0.0 && noise_frac < 1.0)) throw Error("noise_frac must lie in [0, 1)");
  const auto count = static_cast<std::size_t>(std::floor(noise_frac * static_cast<double>(truth.size())));
  if (count > 0 && n_classes < 2) {
    throw Error("corrupting labels needs at least two classes");
  }
  for (int l : truth) {
    if (l < 0 || l >= n_classes) {
      throw Error("label " + std::to_string(l) + " outside 0.." + std::to_string(n_classes - 1));
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());

  Corruption out{truth, order};
  if (count == 0) return out;
  std::uniform_int_distribution<int> pick(0, n_classes - 2);
  for (std::size_t i : out.corrupted) {
    const int r = pick(rng);
    out.labels[i] = r >= truth[i] ? r + 1 : r;
  }
  return out;
}

}  // namespace mbridge::synth
