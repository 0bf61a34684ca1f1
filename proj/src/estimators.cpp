#include "mtfr/estimators.hpp"

#include "mtfr/errors.hpp"
#include "mtfr/fixed_rank.hpp"
#include "mtfr/optim.hpp"
#include "mtfr/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mtfr {

LossKind LossKind::make_quantile(double w, double eps) {
  require(w > 0.0 && w < 1.0, "quantile level must lie in (0,1)");
  return {quantile, w, eps};
}

std::string LossKind::name() const {
  switch (kind) {
    case squared:
      return "squared";
    case logistic:
      return "logistic";
    case quantile:
      return "quantile";
  }
  return "unknown";
}

LossKind parse_loss(const std::string& name, double w, double eps) {
  if (name == "squared") return LossKind::make_squared();
  if (name == "logistic") return LossKind::make_logistic();
  if (name == "quantile") return LossKind::make_quantile(w, eps);
  throw std::invalid_argument("unknown loss '" + name + "'");
}

namespace {

double log1pexp(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }
double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

double quantile_of(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * double(v.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LossEval loss_value_grad(const LossKind& loss, const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
  check_dims(y.size() == u.size(), "loss: y and u differ in length");
  const Eigen::Index n = y.size();
  require(n > 0, "loss: empty sample");
  LossEval out;
  out.grad.resize(n);
  double acc = 0.0, exact = 0.0;
  switch (loss.kind) {
    case LossKind::squared:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = y(i) - u(i);
        acc += r * r;
        out.grad(i) = -2.0 * r;
      }
      exact = acc;
      break;
    case LossKind::logistic:
      for (Eigen::Index i = 0; i < n; ++i) {
        if (y(i) != 0.0 && y(i) != 1.0) throw std::invalid_argument("logistic loss needs labels in {0,1}");
        acc += log1pexp(u(i)) - y(i) * u(i);
        out.grad(i) = sigmoid(u(i)) - y(i);
      }
      exact = acc;
      break;
    case LossKind::quantile: {
      const double eps = loss.smooth_eps;
      require(eps > 0.0, "quantile loss: smoothing width must be positive (resolve it first)");
      const double a = loss.w - 0.5;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double r = y(i) - u(i);
        const double ar = std::abs(r);
        const double h = ar > eps ? ar : r * r / (2.0 * eps) + eps / 2.0;
        acc += a * r + 0.5 * h;
        exact += a * r + 0.5 * ar;
        const double clip = std::clamp(r / eps, -1.0, 1.0);
        out.grad(i) = -(a + 0.5 * clip);
      }
      break;
    }
  }
  out.value = acc / double(n);
  out.exact = exact / double(n);
  out.grad /= double(n);
  return out;
}

Eigen::VectorXd loss_curvature(const LossKind& loss, const Eigen::VectorXd& y, const Eigen::VectorXd& u) {
  const Eigen::Index n = y.size();
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (loss.kind) {
      case LossKind::squared:
        c(i) = 2.0;
        break;
      case LossKind::logistic: {
        const double s = sigmoid(u(i));
        c(i) = s * (1.0 - s);
        break;
      }
      case LossKind::quantile:
        c(i) = std::abs(y(i) - u(i)) <= loss.smooth_eps ? 1.0 / (2.0 * loss.smooth_eps) : 0.0;
        break;
    }
  }
  return c / double(n);
}

LossKind resolve_smoothing(const LossKind& loss, const std::vector<Eigen::VectorXd>& y) {
  if (loss.kind != LossKind::quantile || loss.smooth_eps > 0.0) return loss;
  std::vector<double> all;
  for (const auto& v : y) all.insert(all.end(), v.data(), v.data() + v.size());
  require(!all.empty(), "resolve_smoothing: no responses");
  LossKind out = loss;
  out.smooth_eps = std::max(1e-3 * (quantile_of(all, 0.75) - quantile_of(all, 0.25)), 1e-8);
  return out;
}

void TaskDataset::validate() const {
  require(!x.empty(), "dataset: no tasks");
  check_dims(x.size() == y.size(), "dataset: number of designs and responses differ");
  const Eigen::Index nn = x.front().rows(), kk = x.front().cols();
  require(nn > 0 && kk > 0, "dataset: empty design");
  for (std::size_t m = 0; m < x.size(); ++m) {
    check_dims(x[m].rows() == nn && x[m].cols() == kk,
               "dataset: task " + std::to_string(m) + " design is not " + std::to_string(nn) + "x" +
                   std::to_string(kk));
    check_dims(y[m].size() == nn, "dataset: task " + std::to_string(m) + " response length differs");
    require(x[m].allFinite() && y[m].allFinite(), "dataset: non-finite entries in task " + std::to_string(m));
    if (loss.kind == LossKind::logistic)
      require(((y[m].array() == 0.0) || (y[m].array() == 1.0)).all(),
              "dataset: logistic labels must be 0 or 1");
  }
}

Eigen::MatrixXd TaskDataset::pooled_covariance() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(k(), k());
  for (const auto& xm : x) s.selfadjointView<Eigen::Lower>().rankUpdate(xm.transpose());
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s / double(n() * m());
}

namespace {

bool fitted(const TaskDataset& d) { return d.intercept_mode == InterceptMode::fitted; }

double objective_impl(const TaskDataset& data, const LossKind& loss, const PenaltySpec<double>& spec,
                      const Eigen::VectorXd& alpha, const Eigen::MatrixXd& b, Eigen::MatrixXd* grad_b,
                      Eigen::VectorXd* grad_alpha, bool exact = false) {
  const int m = data.m();
  check_dims(b.rows() == data.k() && b.cols() == m, "objective: B must be K x M");
  const bool fit_a = fitted(data);
  if (fit_a) check_dims(alpha.size() == m, "objective: alpha must have length M");
  if (grad_b) grad_b->resize(data.k(), m);
  if (grad_alpha) grad_alpha->setZero(m);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd u = data.x[j] * b.col(j);
    if (fit_a) u.array() += alpha(j);
    const LossEval le = loss_value_grad(loss, data.y[j], u);
    total += (exact ? le.exact : le.value) / double(m);
    if (grad_b) grad_b->col(j) = data.x[j].transpose() * le.grad / double(m);
    if (grad_alpha && fit_a) (*grad_alpha)(j) = le.grad.sum() / double(m);
  }
  total += penalty_value(spec, b);
  if (grad_b) *grad_b += penalty_gradient(spec, b);
  return total;
}

/// Centred copies (when intercepts are fitted) with column means.
struct Centred {
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::VectorXd> y;
  std::vector<Eigen::RowVectorXd> xbar;
  std::vector<double> ybar;
};

Centred centre(const TaskDataset& data) {
  Centred c;
  const bool fit_a = fitted(data);
  for (int j = 0; j < data.m(); ++j) {
    Eigen::RowVectorXd xb = Eigen::RowVectorXd::Zero(data.k());
    double yb = 0.0;
    if (fit_a) {
      xb = data.x[j].colwise().mean();
      yb = data.y[j].mean();
    }
    c.x.push_back(data.x[j].rowwise() - xb);
    c.y.push_back(data.y[j].array() - yb);
    c.xbar.push_back(xb);
    c.ybar.push_back(yb);
  }
  return c;
}

Eigen::VectorXd intercepts_from(const Centred& c, const Eigen::MatrixXd& b) {
  Eigen::VectorXd a(b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) a(j) = c.ybar[j] - c.xbar[j].dot(b.col(j));
  return a;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": singular system");
  // A rank-deficient PSD matrix can still factor on round-off; reject tiny pivots.
  const Eigen::VectorXd piv = llt.matrixLLT().diagonal().cwiseAbs2();
  if (((piv.array() <= 1e-13 * a.diagonal().array().abs())).any())
    throw NumericalError(std::string(what) + ": singular system");
  return llt.solve(rhs);
}

/// Least-squares solve tolerant of rank deficiency (ALS substeps).
Eigen::VectorXd solve_psd(const Eigen::MatrixXd& a, const Eigen::VectorXd& rhs) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  return a.completeOrthogonalDecomposition().solve(rhs);
}

struct TaskFit {
  Eigen::VectorXd b;
  double alpha = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes mean_n l(y, alpha + x^T b) + M eta1 b^T Gamma b for one task.
TaskFit fit_one_task(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LossKind& loss,
                     const Eigen::VectorXd& pen_diag, bool fit_a, double alpha0, const FitOptions& opts) {
  const Eigen::Index k = x.cols(), n = x.rows();
  const Eigen::Index p = k + (fit_a ? 1 : 0);
  auto unpack_u = [&](const Eigen::VectorXd& th) {
    Eigen::VectorXd u = x * th.head(k);
    if (fit_a) u.array() += th(k);
    return u;
  };
  auto value_grad = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
    const Eigen::VectorXd u = unpack_u(th);
    const LossEval le = loss_value_grad(loss, y, u);
    const Eigen::VectorXd bb = th.head(k);
    double val = le.value + bb.dot(pen_diag.cwiseProduct(bb));
    if (g) {
      g->resize(p);
      g->head(k) = x.transpose() * le.grad + 2.0 * pen_diag.cwiseProduct(bb);
      if (fit_a) (*g)(k) = le.grad.sum();
    }
    return val;
  };
  Eigen::VectorXd th = Eigen::VectorXd::Zero(p);
  if (fit_a) th(k) = alpha0;
  TaskFit out;
  if (loss.kind == LossKind::logistic) {
    Eigen::VectorXd g;
    double f = value_grad(th, &g);
    for (int it = 0; it < opts.max_iter; ++it) {
      if (g.norm() < opts.grad_tol) {
        out.converged = true;
        break;
      }
      const Eigen::VectorXd c = loss_curvature(loss, y, unpack_u(th));
      Eigen::MatrixXd z(n, p);
      z.leftCols(k) = x;
      if (fit_a) z.col(k).setOnes();
      Eigen::MatrixXd h = z.transpose() * c.asDiagonal() * z;
      h.diagonal().head(k) += 2.0 * pen_diag;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      Eigen::VectorXd dir = -ldlt.solve(g);
      if (ldlt.info() != Eigen::Success || !dir.allFinite() || g.dot(dir) >= 0.0) {
        h.diagonal().array() += 1e-10 * std::max(1.0, h.diagonal().maxCoeff());
        dir = -h.completeOrthogonalDecomposition().solve(g);
      }
      double step = 1.0;
      Eigen::VectorXd g_new;
      double f_new = f;
      bool ok = false;
      for (int ls = 0; ls < 60; ++ls) {
        const Eigen::VectorXd cand = th + step * dir;
        f_new = value_grad(cand, &g_new);
        if (f_new <= f + 1e-4 * step * g.dot(dir)) {
          th = cand;
          ok = true;
          break;
        }
        step *= 0.5;
      }
      out.iterations = it + 1;
      if (!ok) break;
      f = f_new;
      g = g_new;
    }
    if (g.norm() < opts.grad_tol) out.converged = true;
  } else {
    LbfgsOptions lo;
    lo.grad_tol = opts.grad_tol;
    lo.max_iter = opts.max_iter;
    const MinimizeResult r = lbfgs_minimize(value_grad, th, lo);
    th = r.x;
    out.iterations = r.iterations;
    out.converged = r.converged;
  }
  out.b = th.head(k);
  out.alpha = fit_a ? th(k) : 0.0;
  return out;
}

/// Root of the (monotone) derivative of the mean loss in a scalar shift.
double location_estimate(const LossKind& loss, const Eigen::VectorXd& y) {
  if (loss.kind == LossKind::squared) return y.mean();
  if (loss.kind == LossKind::logistic) {
    const double p = y.mean();
    if (p <= 0.0 || p >= 1.0) throw NumericalError("logistic intercept: all labels are identical");
    return std::log(p / (1.0 - p));
  }
  double lo = y.minCoeff() - 1.0 - loss.smooth_eps, hi = y.maxCoeff() + 1.0 + loss.smooth_eps;
  auto deriv = [&](double a) {
    return loss_value_grad(loss, y, Eigen::VectorXd::Constant(y.size(), a)).grad.sum();
  };
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (deriv(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double objective(const TaskDataset& data, const PenaltySpec<double>& spec, const Eigen::VectorXd& alpha,
                 const Eigen::MatrixXd& b, Eigen::MatrixXd* grad_b, Eigen::VectorXd* grad_alpha) {
  return objective_impl(data, resolve_smoothing(data.loss, data.y), spec, alpha, b, grad_b, grad_alpha);
}

double exact_objective(const TaskDataset& data, const PenaltySpec<double>& spec, const Eigen::VectorXd& alpha,
                       const Eigen::MatrixXd& b) {
  return objective_impl(data, resolve_smoothing(data.loss, data.y), spec, alpha, b, nullptr, nullptr, true);
}

PenaltySpec<double> pooled_penalty(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1) {
  check_dims(gamma.size() == data.k(), "penalty: gamma length differs from K");
  return roughness_spec<double>(gamma, eta1, data.m());
}

PenaltySpec<double> graph_penalty(const TaskDataset& data, const Eigen::VectorXd& gamma,
                                  const Eigen::MatrixXd& omega, double eta1, double eta2) {
  check_dims(gamma.size() == data.k(), "penalty: gamma length differs from K");
  check_dims(omega.rows() == data.m(), "penalty: Laplacian size differs from M");
  return graph_penalty_spec<double>(gamma, omega, data.pooled_covariance(), eta1, eta2);
}

Eigen::VectorXd fit_intercepts(const TaskDataset& data, const FitOptions&) {
  data.validate();
  const LossKind loss = resolve_smoothing(data.loss, data.y);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(data.m());
  if (!fitted(data)) return a;
  for (int j = 0; j < data.m(); ++j) a(j) = location_estimate(loss, data.y[j]);
  return a;
}

FitResult fit_pooled(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1, const FitOptions& opts) {
  data.validate();
  require(eta1 >= 0.0, "fit_pooled: eta1 must be nonnegative");
  check_dims(gamma.size() == data.k(), "fit_pooled: gamma length differs from K");
  const int m = data.m(), k = data.k();
  const double n = data.n();
  const LossKind loss = resolve_smoothing(data.loss, data.y);
  const PenaltySpec<double> spec = pooled_penalty(data, gamma, eta1);
  FitResult res;
  res.b.resize(k, m);
  res.alpha = Eigen::VectorXd::Zero(m);
  const Eigen::VectorXd pen_diag = double(m) * eta1 * gamma;
  if (loss.kind == LossKind::squared) {
    const Centred c = centre(data);
    for (int j = 0; j < m; ++j) {
      Eigen::MatrixXd a = c.x[j].transpose() * c.x[j] / n;
      a.diagonal() += pen_diag;
      res.b.col(j) = solve_spd(a, c.x[j].transpose() * c.y[j] / n, "fit_pooled");
    }
    if (fitted(data)) res.alpha = intercepts_from(c, res.b);
    res.converged = true;
    res.iterations = 1;
  } else {
    res.objective_trace.push_back(objective_impl(data, loss, spec, fit_intercepts(data), Eigen::MatrixXd::Zero(k, m),
                                                 nullptr, nullptr));
    res.converged = true;
    for (int j = 0; j < m; ++j) {
      const double a0 = fitted(data) ? location_estimate(loss, data.y[j]) : 0.0;
      const TaskFit tf = fit_one_task(data.x[j], data.y[j], loss, pen_diag, fitted(data), a0, opts);
      res.b.col(j) = tf.b;
      res.alpha(j) = tf.alpha;
      res.iterations = std::max(res.iterations, tf.iterations);
      res.converged = res.converged && tf.converged;
    }
  }
  Eigen::MatrixXd gb;
  Eigen::VectorXd ga;
  res.objective = objective_impl(data, loss, spec, res.alpha, res.b, &gb, &ga);
  res.grad_norm = std::sqrt(gb.squaredNorm() + ga.squaredNorm());
  res.objective_trace.push_back(res.objective);
  return res;
}

namespace {

/// Squared-loss graph system pieces: per-task blocks and right-hand side,
/// both carrying the 1/(NM) scaling.
struct GraphSystem {
  std::vector<Eigen::MatrixXd> gram;
  Eigen::MatrixXd rhs;
  Eigen::MatrixXd sigma_hat;
  double c0 = 0.0;
  Centred centred;
};

GraphSystem graph_system(const TaskDataset& data) {
  GraphSystem gs;
  gs.centred = centre(data);
  const double nm = double(data.n()) * data.m();
  gs.rhs.resize(data.k(), data.m());
  for (int j = 0; j < data.m(); ++j) {
    gs.gram.push_back(gs.centred.x[j].transpose() * gs.centred.x[j] / nm);
    gs.rhs.col(j) = gs.centred.x[j].transpose() * gs.centred.y[j] / nm;
    gs.c0 += gs.centred.y[j].squaredNorm() / nm;
  }
  gs.sigma_hat = data.pooled_covariance();
  return gs;
}

}  // namespace

Eigen::VectorXd graph_dense_solve(const TaskDataset& data, const Eigen::VectorXd& gamma,
                                  const Eigen::MatrixXd& omega, double eta1, double eta2) {
  data.validate();
  const int k = data.k(), m = data.m();
  require(k * m <= 4096, "graph_dense_solve: limited to K*M <= 4096");
  const GraphSystem gs = graph_system(data);
  const Eigen::MatrixXd g = gamma.asDiagonal();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k * m, k * m);
  for (int j = 0; j < m; ++j) {
    a.block(j * k, j * k, k, k) += gs.gram[j] + eta1 * g;
    for (int i = 0; i < m; ++i)
      a.block(i * k, j * k, k, k) += omega(i, j) * (eta2 * gs.sigma_hat + eta1 * eta2 * g);
  }
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(gs.rhs.data(), k * m);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw NumericalError("graph_dense_solve: factorization failed");
  return ldlt.solve(rhs);
}

FitResult fit_graph(const TaskDataset& data, const Eigen::VectorXd& gamma, const Eigen::MatrixXd& omega,
                    double eta1, double eta2, const FitOptions& opts) {
  data.validate();
  require(eta1 >= 0.0 && eta2 >= 0.0, "fit_graph: penalty parameters must be nonnegative");
  const int k = data.k(), m = data.m();
  const LossKind loss = resolve_smoothing(data.loss, data.y);
  const PenaltySpec<double> spec = graph_penalty(data, gamma, omega, eta1, eta2);
  FitResult res;
  res.alpha = Eigen::VectorXd::Zero(m);
  if (loss.kind == LossKind::squared) {
    const GraphSystem gs = graph_system(data);
    const Eigen::MatrixXd& sig = gs.sigma_hat;
    auto apply = [&](const Eigen::MatrixXd& b) {
      Eigen::MatrixXd out(k, m);
      for (int j = 0; j < m; ++j) out.col(j) = gs.gram[j] * b.col(j);
      out += eta1 * gamma.asDiagonal() * b;
      if (eta2 > 0.0) {
        const Eigen::MatrixXd bo = b * omega;
        out += eta2 * sig * bo + eta1 * eta2 * gamma.asDiagonal() * bo;
      }
      return out;
    };
    std::vector<Eigen::LLT<Eigen::MatrixXd>> pre;
    for (int j = 0; j < m; ++j) {
      Eigen::MatrixXd blk = gs.gram[j] + eta2 * omega(j, j) * sig;
      blk.diagonal() += eta1 * (1.0 + eta2 * omega(j, j)) * gamma;
      pre.emplace_back(blk);
      if (pre.back().info() != Eigen::Success) {
        blk.diagonal().array() += 1e-12 * std::max(1.0, blk.diagonal().maxCoeff());
        pre.back().compute(blk);
      }
    }
    auto precond = [&](const Eigen::MatrixXd& r) {
      Eigen::MatrixXd z(k, m);
      for (int j = 0; j < m; ++j) z.col(j) = pre[j].solve(r.col(j));
      return z;
    };
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, m);
    Eigen::MatrixXd r = gs.rhs;
    const double rhs_norm = gs.rhs.norm();
    Eigen::MatrixXd z = precond(r), p = z;
    double rz = (r.array() * z.array()).sum();
    res.objective_trace.push_back(gs.c0);
    const int max_it = 10 * k * m;
    if (rhs_norm == 0.0) res.converged = true;
    for (int it = 0; it < max_it && !res.converged; ++it) {
      const Eigen::MatrixXd ap = apply(p);
      const double pap = (p.array() * ap.array()).sum();
      if (!(pap > 0.0)) throw NumericalError("fit_graph: operator is not positive definite");
      const double step = rz / pap;
      b += step * p;
      r -= step * ap;
      res.iterations = it + 1;
      res.objective_trace.push_back(gs.c0 - (b.array() * (gs.rhs + r).array()).sum());
      if (r.norm() <= opts.cg_tol * rhs_norm) {
        res.converged = true;
        break;
      }
      z = precond(r);
      const double rz_new = (r.array() * z.array()).sum();
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    if (!res.converged)
      throw NumericalError("fit_graph: conjugate gradients did not converge in " + std::to_string(max_it) +
                           " iterations");
    res.b = b;
    if (fitted(data)) res.alpha = intercepts_from(gs.centred, b);
  } else {
    const bool fit_a = fitted(data);
    const Eigen::Index nb = Eigen::Index(k) * m;
    auto unpack = [&](const Eigen::VectorXd& th, Eigen::VectorXd& a) {
      a = fit_a ? Eigen::VectorXd(th.tail(m)) : Eigen::VectorXd::Zero(m);
      return Eigen::Map<const Eigen::MatrixXd>(th.data(), k, m);
    };
    auto f = [&](const Eigen::VectorXd& th, Eigen::VectorXd* g) {
      Eigen::VectorXd a;
      const Eigen::MatrixXd b = unpack(th, a);
      Eigen::MatrixXd gb;
      Eigen::VectorXd ga;
      const double v = objective_impl(data, loss, spec, a, b, g ? &gb : nullptr, g ? &ga : nullptr);
      if (g) {
        g->resize(th.size());
        g->head(nb) = Eigen::Map<const Eigen::VectorXd>(gb.data(), nb);
        if (fit_a) g->tail(m) = ga;
      }
      return v;
    };
    Eigen::VectorXd th = Eigen::VectorXd::Zero(nb + (fit_a ? m : 0));
    if (fit_a) th.tail(m) = fit_intercepts(data);
    LbfgsOptions lo;
    lo.grad_tol = opts.grad_tol;
    lo.max_iter = std::max(opts.max_iter, 20 * int(nb));
    const MinimizeResult mr = lbfgs_minimize(f, th, lo);
    Eigen::VectorXd a;
    res.b = unpack(mr.x, a);
    res.alpha = a;
    res.objective_trace = mr.trace;
    res.iterations = mr.iterations;
    res.converged = mr.converged;
  }
  Eigen::MatrixXd gb;
  Eigen::VectorXd ga;
  res.objective = objective_impl(data, loss, spec, res.alpha, res.b, &gb, &ga);
  res.grad_norm = std::sqrt(gb.squaredNorm() + ga.squaredNorm());
  return res;
}

namespace {

FitResult fit_reduced_als(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1, int rank,
                          const ReducedOptions& ropts, const FitOptions& opts) {
  const int k = data.k(), m = data.m();
  const double n = data.n();
  const Centred c = centre(data);
  std::vector<Eigen::MatrixXd> g(m);
  Eigen::MatrixXd r(k, m);
  double c0 = 0.0;
  for (int j = 0; j < m; ++j) {
    g[j] = c.x[j].transpose() * c.x[j] / n;
    r.col(j) = c.x[j].transpose() * c.y[j] / n;
    c0 += c.y[j].squaredNorm() / n;
  }
  c0 /= m;
  auto obj = [&](const Eigen::MatrixXd& b) {
    double v = c0;
    for (int j = 0; j < m; ++j) v += (b.col(j).dot(g[j] * b.col(j)) - 2.0 * b.col(j).dot(r.col(j))) / m;
    return v + eta1 * (b.transpose() * gamma.asDiagonal() * b).trace();
  };

  Rng rng(ropts.seed);
  Eigen::MatrixXd d(k, rank);
  if (ropts.init == ReducedInit::svd_of_pooled) {
    const FitResult pooled = fit_pooled(data, gamma, eta1, opts);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(pooled.b, Eigen::ComputeThinU);
    const Eigen::VectorXd& s = svd.singularValues();
    d = svd.matrixU().leftCols(rank) * s.head(rank).asDiagonal();
    const double floor = 1e-8 * std::max(1.0, s(0));
    for (int q = 0; q < rank; ++q)
      if (s(q) <= floor) d.col(q) = floor * standard_normal(k, 1, rng);
  } else {
    d = standard_normal(k, rank, rng);
  }

  Eigen::MatrixXd a(m, rank);
  auto a_step = [&]() {
    const Eigen::MatrixXd dgd = d.transpose() * gamma.asDiagonal() * d;
    for (int j = 0; j < m; ++j) {
      const Eigen::MatrixXd h = d.transpose() * g[j] * d + double(m) * eta1 * dgd;
      a.row(j) = solve_psd(h, d.transpose() * r.col(j)).transpose();
    }
  };
  auto d_step = [&]() {
    const int kr = k * rank;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(kr, kr);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, rank);
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd aj = a.row(j).transpose();
      for (int q2 = 0; q2 < rank; ++q2)
        for (int q1 = 0; q1 < rank; ++q1) h.block(q1 * k, q2 * k, k, k) += (aj(q1) * aj(q2) / m) * g[j];
      rhs += r.col(j) * aj.transpose() / m;
    }
    const Eigen::MatrixXd ata = a.transpose() * a;
    for (int q2 = 0; q2 < rank; ++q2)
      for (int q1 = 0; q1 < rank; ++q1) h.block(q1 * k, q2 * k, k, k).diagonal() += eta1 * ata(q1, q2) * gamma;
    const Eigen::VectorXd sol = solve_psd(h, Eigen::Map<const Eigen::VectorXd>(rhs.data(), kr));
    d = Eigen::Map<const Eigen::MatrixXd>(sol.data(), k, rank);
  };
  auto rebalance = [&]() {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, rank);
    const Eigen::MatrixXd rr = q.transpose() * a;
    d = d * rr.transpose();
    a = q;
  };

  FitResult res;
  a_step();
  double prev = obj(d * a.transpose());
  res.objective_trace.push_back(prev);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    d_step();
    a_step();
    rebalance();
    const double cur = obj(d * a.transpose());
    res.objective_trace.push_back(cur);
    res.iterations = sweep + 1;
    const bool done = std::abs(prev - cur) < opts.als_tol * (1.0 + std::abs(cur));
    prev = cur;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.b = d * a.transpose();
  res.alpha = fitted(data) ? intercepts_from(c, res.b) : Eigen::VectorXd::Zero(m);
  return res;
}

FitResult fit_reduced_riemannian(const TaskDataset& data, const LossKind& loss, const Eigen::VectorXd& gamma,
                                 double eta1, int rank, const ReducedOptions& ropts, const FitOptions& opts) {
  using Point = FixedRankPoint<double>;
  using Tangent = TangentVector<double>;
  const int k = data.k(), m = data.m();
  const bool fit_a = fitted(data);
  const PenaltySpec<double> spec = pooled_penalty(data, gamma, eta1);
  Rng rng(ropts.seed);

  Point pt;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  if (ropts.init == ReducedInit::svd_of_pooled) {
    const FitResult pooled = fit_pooled(data, gamma, eta1, opts);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(pooled.b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues().head(rank);
    const double floor = 1e-6 * std::max(1.0, svd.singularValues()(0));
    for (int q = 0; q < rank; ++q) s(q) = std::max(s(q), floor);
    pt = Point::from_dense(svd.matrixU().leftCols(rank) * s.asDiagonal() * svd.matrixV().leftCols(rank).transpose(),
                           rank);
    alpha = pooled.alpha;
  } else {
    Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(rank, 1.0, 0.5) * 0.1;
    pt = random_point<double>(k, m, s, rng);
    if (fit_a) alpha = fit_intercepts(data);
  }

  auto eval = [&](const Point& p, const Eigen::VectorXd& a, Eigen::MatrixXd* gb, Eigen::VectorXd* ga) {
    return objective_impl(data, loss, spec, a, p.dense(), gb, ga);
  };
  // Second derivative of the ambient objective along (delta, delta_alpha).
  auto curvature_along = [&](const Point& p, const Eigen::VectorXd& a, const Eigen::MatrixXd& delta,
                             const Eigen::VectorXd& da) {
    const Eigen::MatrixXd b = p.dense();
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd u = data.x[j] * b.col(j);
      Eigen::VectorXd du = data.x[j] * delta.col(j);
      if (fit_a) {
        u.array() += a(j);
        du.array() += da(j);
      }
      acc += loss_curvature(loss, data.y[j], u).dot(du.cwiseAbs2()) / m;
    }
    return acc + 2.0 * penalty_value(spec, delta);
  };

  FitResult res;
  Eigen::MatrixXd gb;
  Eigen::VectorXd ga;
  double f = eval(pt, alpha, &gb, &ga);
  res.objective_trace.push_back(f);
  Tangent xi = project_tangent(pt, gb);
  Tangent eta = xi * -1.0;
  Eigen::VectorXd eta_a = -ga;
  double gnorm2 = tangent_norm(xi) * tangent_norm(xi) + ga.squaredNorm();
  for (int it = 0; it < opts.riemannian_max_iter; ++it) {
    if (std::sqrt(gnorm2) < opts.riemannian_tol) {
      res.converged = true;
      break;
    }
    double slope = (to_dense(pt, xi).array() * to_dense(pt, eta).array()).sum() + ga.dot(eta_a);
    if (!(slope < 0.0)) {
      eta = xi * -1.0;
      eta_a = -ga;
      slope = -gnorm2;
    }
    const Eigen::MatrixXd delta = to_dense(pt, eta);
    const double fpp = curvature_along(pt, alpha, delta, eta_a);
    double step = fpp > 0.0 ? -slope / fpp : 1.0 / std::sqrt(gnorm2);
    Point cand;
    Eigen::VectorXd cand_a;
    double f_new = f;
    bool ok = false;
    for (int ls = 0; ls < 60; ++ls) {
      try {
        cand = retract(pt, eta * step);
      } catch (const RankDegeneracy&) {
        step *= 0.5;
        continue;
      }
      cand_a = alpha + step * eta_a;
      f_new = eval(cand, cand_a, nullptr, nullptr);
      if (f_new <= f + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if (!ok) break;
    Eigen::MatrixXd gb_new;
    Eigen::VectorXd ga_new;
    f = eval(cand, cand_a, &gb_new, &ga_new);
    const Tangent xi_new = project_tangent(cand, gb_new);
    const Tangent xi_old_t = project_tangent(cand, to_dense(pt, xi));
    const Tangent eta_t = project_tangent(cand, to_dense(pt, eta));
    const double gnorm2_new = std::pow(tangent_norm(xi_new), 2) + ga_new.squaredNorm();
    const double num = (to_dense(cand, xi_new).array() * to_dense(cand, xi_new - xi_old_t).array()).sum() +
                       ga_new.dot(ga_new - ga);
    const double beta = std::max(0.0, num / gnorm2);
    pt = cand;
    alpha = cand_a;
    xi = xi_new;
    ga = ga_new;
    gnorm2 = gnorm2_new;
    eta = xi * -1.0 + eta_t * beta;
    eta_a = -ga + beta * eta_a;
    res.objective_trace.push_back(f);
  }
  if (std::sqrt(gnorm2) < opts.riemannian_tol) res.converged = true;
  res.b = pt.dense();
  res.alpha = fit_a ? alpha : Eigen::VectorXd::Zero(m);
  return res;
}

}  // namespace

FitResult fit_reduced(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1, int rank,
                      const ReducedOptions& ropts, const FitOptions& opts) {
  data.validate();
  require(eta1 >= 0.0, "fit_reduced: eta1 must be nonnegative");
  check_dims(gamma.size() == data.k(), "fit_reduced: gamma length differs from K");
  require(rank >= 1 && rank <= std::min(data.k(), data.m()), "fit_reduced: rank must lie in [1, min(K, M)]");
  const LossKind loss = resolve_smoothing(data.loss, data.y);
  FitResult res;
  if (ropts.method == ReducedMethod::als) {
    require(loss.kind == LossKind::squared, "fit_reduced: ALS is only available for the squared loss");
    res = fit_reduced_als(data, gamma, eta1, rank, ropts, opts);
  } else {
    res = fit_reduced_riemannian(data, loss, gamma, eta1, rank, ropts, opts);
  }
  const PenaltySpec<double> spec = pooled_penalty(data, gamma, eta1);
  res.objective = objective_impl(data, loss, spec, res.alpha, res.b, nullptr, nullptr);
  res.grad_norm = reduced_grad_norm(data, gamma, eta1, rank, res);
  return res;
}

double reduced_grad_norm(const TaskDataset& data, const Eigen::VectorXd& gamma, double eta1, int rank,
                         const FitResult& fit) {
  const LossKind loss = resolve_smoothing(data.loss, data.y);
  const PenaltySpec<double> spec = pooled_penalty(data, gamma, eta1);
  Eigen::MatrixXd gb;
  Eigen::VectorXd ga;
  objective_impl(data, loss, spec, fit.alpha, fit.b, &gb, &ga);
  const FixedRankPoint<double> p = FixedRankPoint<double>::from_dense(fit.b, rank);
  const double t = tangent_norm(project_tangent(p, gb));
  return std::sqrt(t * t + ga.squaredNorm());
}

}  // namespace mtfr
