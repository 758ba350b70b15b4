#pragma once

#include <vector>

#include "mbridge/calibration.hpp"
#include "mbridge/types.hpp"

namespace mbridge::otmatch {

// C_ij = exp(-cos(p_i^v, p_j^r)), Y^v x Y^r.
struct CostMatrix {
  Matrix values;
};

struct TransportPlan {
  Matrix q;  // Y^v x Y^r coupling
  double lambda_reg = 0.0;
  int iterations = 0;
  bool converged = false;
  // Largest deviation of any row sum from 1/Y^v or column sum from 1/Y^r.
  double max_residual = 0.0;
};

struct CrossModalMatch {
  std::vector<int> v2r;  // per visible cluster, an infrared cluster id
  std::vector<int> r2v;  // per infrared cluster, a visible cluster id
};

CostMatrix build_cost(const calibration::PrototypeSet& visible,
                      const calibration::PrototypeSet& infrared);

// Entropic OT with uniform marginals: minimises <Q, C> + (1/lambda) H(Q),
// H(Q) = sum Q_ij (log Q_ij - 1), via log-domain Sinkhorn-Knopp scaling of
// the kernel exp(-lambda C). Past a fixed number of scaling sweeps, Newton
// steps on the dual potentials alternate with the sweeps. Stops once the marginal residual drops below
// tol; otherwise returns after max_iters with converged == false.
TransportPlan sinkhorn(const CostMatrix& cost, double lambda_reg, int max_iters = 1000,
                       double tol = 1e-8);

// Row argmax gives v2r, column argmax gives r2v; ties go to the lower index.
CrossModalMatch extract_match(const TransportPlan& plan);

// Max |row_sum - 1/rows| and |col_sum - 1/cols| of q.
double marginal_residual(const Matrix& q);

}  // namespace mbridge::otmatch
