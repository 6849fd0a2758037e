#include "pvm/conic/interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

namespace pvm::conic {

namespace {

using Vec = Eigen::VectorXd;
using Index = Eigen::Index;
using Triplet = Eigen::Triplet<double, int>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SocBlock {
  Index offset = 0;
  Index dim = 0;
  Eigen::MatrixXd W;
  Eigen::MatrixXd W2;
};

double norm_inf(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

class Ipm {
 public:
  Ipm(const StandardForm& sf, const IpmSettings& st) : st_(st) {
    A_ = sf.A;
    G_ = sf.G;
    b_ = sf.b;
    h_ = sf.h;
    c_ = sf.c;
    offset_ = sf.objective_offset;
    n_ = c_.size();
    p_ = b_.size();
    m_ = h_.size();
    lp_ = static_cast<Index>(sf.lp_rows);
    Index off = lp_;
    for (std::size_t d : sf.soc_dims) {
      SocBlock blk;
      blk.offset = off;
      blk.dim = static_cast<Index>(d);
      blk.W = Eigen::MatrixXd::Identity(blk.dim, blk.dim);
      blk.W2 = blk.W;
      cones_.push_back(std::move(blk));
      off += static_cast<Index>(d);
    }
    degree_ = static_cast<double>(lp_ + static_cast<Index>(cones_.size()));
    lp_w_ = Vec::Ones(lp_);
    equilibrate();
    At_ = A_.transpose();
    Gt_ = G_.transpose();
  }

  IpmResult run();

 private:
  void equilibrate();
  void build_kkt();
  void write_kkt_scaling();
  bool factor();
  Vec kkt_solve(const Vec& rhs);
  Vec kkt_apply(const Vec& v) const;
  bool update_scalings(const Vec& s, const Vec& z);
  Vec apply_w(const Vec& v) const;
  Vec apply_w2(const Vec& v) const;
  Vec conic_product(const Vec& u, const Vec& v) const;
  Vec conic_division(const Vec& u, const Vec& w) const;
  Vec bring_to_cone(Vec r) const;
  Vec unit() const;
  double line_search(const Vec& lambda, const Vec& ds, const Vec& dz, double tau, double dtau, double kap,
                     double dkap) const;
  IpmResult finish(IpmExit exit, const Vec& x, const Vec& y, const Vec& z, const Vec& s, double tau, int iters);

  const IpmSettings& st_;
  SparseMatrix A_, G_, At_, Gt_;
  Vec b_, h_, c_;
  double offset_ = 0.0;
  Index n_ = 0, p_ = 0, m_ = 0, lp_ = 0;
  std::vector<SocBlock> cones_;
  double degree_ = 0.0;

  Vec xeq_, aeq_, geq_;
  double cscale_ = 1.0;

  Vec lp_w_;
  SparseMatrix K_;
  std::vector<double*> lp_diag_;
  std::vector<std::vector<double*>> cone_entries_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;

  double pres_ = kNaN, dres_ = kNaN, gap_ = kNaN;
};

void Ipm::equilibrate() {
  xeq_ = Vec::Ones(n_);
  aeq_ = Vec::Ones(p_);
  geq_ = Vec::Ones(m_);
  for (int pass = 0; pass < st_.equilibration_passes; ++pass) {
    Vec xt = Vec::Zero(n_), at = Vec::Zero(p_), gt = Vec::Zero(m_);
    for (Index j = 0; j < n_; ++j) {
      for (SparseMatrix::InnerIterator it(A_, j); it; ++it) {
        const double v = std::fabs(it.value());
        xt[j] = std::max(xt[j], v);
        at[it.row()] = std::max(at[it.row()], v);
      }
      for (SparseMatrix::InnerIterator it(G_, j); it; ++it) {
        const double v = std::fabs(it.value());
        xt[j] = std::max(xt[j], v);
        gt[it.row()] = std::max(gt[it.row()], v);
      }
    }
    // A cone must be scaled uniformly to stay a cone.
    for (const SocBlock& blk : cones_) {
      const double mx = gt.segment(blk.offset, blk.dim).maxCoeff();
      gt.segment(blk.offset, blk.dim).setConstant(mx);
    }
    auto fix = [](Vec& v) {
      for (Index i = 0; i < v.size(); ++i) v[i] = v[i] < 1e-6 ? 1.0 : std::sqrt(v[i]);
    };
    fix(xt);
    fix(at);
    fix(gt);
    for (Index j = 0; j < n_; ++j) {
      for (SparseMatrix::InnerIterator it(A_, j); it; ++it) it.valueRef() /= at[it.row()] * xt[j];
      for (SparseMatrix::InnerIterator it(G_, j); it; ++it) it.valueRef() /= gt[it.row()] * xt[j];
    }
    xeq_.array() *= xt.array();
    aeq_.array() *= at.array();
    geq_.array() *= gt.array();
  }
  b_.array() /= aeq_.array();
  h_.array() /= geq_.array();
  c_.array() /= xeq_.array();
  const double cmax = norm_inf(c_);
  cscale_ = cmax > 0.0 ? cmax : 1.0;
  c_ /= cscale_;
}

void Ipm::build_kkt() {
  const Index dim = n_ + p_ + m_;
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(dim + A_.nonZeros() + G_.nonZeros()) + 16 * cones_.size());
  for (Index i = 0; i < n_; ++i) trip.emplace_back(i, i, st_.delta_static);
  for (Index j = 0; j < n_; ++j) {
    for (SparseMatrix::InnerIterator it(A_, j); it; ++it)
      trip.emplace_back(static_cast<int>(n_ + it.row()), static_cast<int>(j), it.value());
    for (SparseMatrix::InnerIterator it(G_, j); it; ++it)
      trip.emplace_back(static_cast<int>(n_ + p_ + it.row()), static_cast<int>(j), it.value());
  }
  for (Index i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -st_.delta_static);
  for (Index i = 0; i < lp_; ++i) trip.emplace_back(n_ + p_ + i, n_ + p_ + i, -1.0);
  for (const SocBlock& blk : cones_)
    for (Index a = 0; a < blk.dim; ++a)
      for (Index c = 0; c <= a; ++c)
        trip.emplace_back(n_ + p_ + blk.offset + a, n_ + p_ + blk.offset + c, a == c ? -1.0 : 0.0);
  K_.resize(dim, dim);
  K_.setFromTriplets(trip.begin(), trip.end());
  K_.makeCompressed();
  lp_diag_.resize(static_cast<std::size_t>(lp_));
  for (Index i = 0; i < lp_; ++i) lp_diag_[i] = &K_.coeffRef(n_ + p_ + i, n_ + p_ + i);
  cone_entries_.clear();
  for (const SocBlock& blk : cones_) {
    std::vector<double*> ptrs;
    for (Index a = 0; a < blk.dim; ++a)
      for (Index c = 0; c <= a; ++c) ptrs.push_back(&K_.coeffRef(n_ + p_ + blk.offset + a, n_ + p_ + blk.offset + c));
    cone_entries_.push_back(std::move(ptrs));
  }
}

void Ipm::write_kkt_scaling() {
  for (Index i = 0; i < lp_; ++i) *lp_diag_[i] = -lp_w_[i] * lp_w_[i] - st_.delta_static;
  for (std::size_t k = 0; k < cones_.size(); ++k) {
    const SocBlock& blk = cones_[k];
    std::size_t e = 0;
    for (Index a = 0; a < blk.dim; ++a)
      for (Index c = 0; c <= a; ++c) *cone_entries_[k][e++] = -blk.W2(a, c) - (a == c ? st_.delta_static : 0.0);
  }
}

bool Ipm::factor() {
  if (!analyzed_) {
    ldlt_.analyzePattern(K_);
    analyzed_ = true;
  }
  ldlt_.factorize(K_);
  return ldlt_.info() == Eigen::Success;
}

// Product with the unregularized KKT matrix [0 A' G'; A 0 0; G 0 -W^2].
Vec Ipm::kkt_apply(const Vec& v) const {
  const auto dx = v.head(n_);
  const auto dy = v.segment(n_, p_);
  const Vec dz = v.tail(m_);
  Vec out(n_ + p_ + m_);
  out.head(n_) = At_ * dy + Gt_ * dz;
  out.segment(n_, p_) = A_ * dx;
  out.tail(m_) = G_ * dx - apply_w2(dz);
  return out;
}

Vec Ipm::kkt_solve(const Vec& rhs) {
  Vec sol = ldlt_.solve(rhs);
  const double threshold = (1.0 + norm_inf(rhs)) * 1e-14;
  double prev = std::numeric_limits<double>::infinity();
  Vec prev_sol = sol;
  for (int k = 0; k <= st_.refinement_steps; ++k) {
    const Vec err = rhs - kkt_apply(sol);
    const double nerr = norm_inf(err);
    if (nerr > prev) {
      sol = prev_sol;
      break;
    }
    if (nerr <= threshold || k == st_.refinement_steps) break;
    prev = nerr;
    prev_sol = sol;
    sol += ldlt_.solve(err);
  }
  return sol;
}

bool Ipm::update_scalings(const Vec& s, const Vec& z) {
  for (Index i = 0; i < lp_; ++i) {
    if (s[i] <= 0.0 || z[i] <= 0.0) return false;
    lp_w_[i] = std::sqrt(s[i] / z[i]);
  }
  for (SocBlock& blk : cones_) {
    const auto sk = s.segment(blk.offset, blk.dim);
    const auto zk = z.segment(blk.offset, blk.dim);
    const Index d1 = blk.dim - 1;
    const double sres = sk[0] * sk[0] - sk.tail(d1).squaredNorm();
    const double zres = zk[0] * zk[0] - zk.tail(d1).squaredNorm();
    if (sres <= 0.0 || zres <= 0.0 || sk[0] <= 0.0 || zk[0] <= 0.0) return false;
    const double snorm = std::sqrt(sres);
    const double znorm = std::sqrt(zres);
    const Vec sbar = sk / snorm;
    const Vec zbar = zk / znorm;
    const double eta = std::sqrt(snorm / znorm);
    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    const double a = 0.5 * (sbar[0] + zbar[0]) / gamma;
    const Vec q = 0.5 * (sbar.tail(d1) - zbar.tail(d1)) / gamma;
    blk.W.resize(blk.dim, blk.dim);
    blk.W(0, 0) = a;
    blk.W.block(0, 1, 1, d1) = q.transpose();
    blk.W.block(1, 0, d1, 1) = q;
    blk.W.block(1, 1, d1, d1) = Eigen::MatrixXd::Identity(d1, d1) + q * q.transpose() / (1.0 + a);
    blk.W *= eta;
    blk.W2 = blk.W * blk.W;
  }
  return true;
}

Vec Ipm::apply_w(const Vec& v) const {
  Vec out(m_);
  out.head(lp_) = lp_w_.cwiseProduct(v.head(lp_));
  for (const SocBlock& blk : cones_) out.segment(blk.offset, blk.dim) = blk.W * v.segment(blk.offset, blk.dim);
  return out;
}

Vec Ipm::apply_w2(const Vec& v) const {
  Vec out(m_);
  out.head(lp_) = lp_w_.cwiseAbs2().cwiseProduct(v.head(lp_));
  for (const SocBlock& blk : cones_) out.segment(blk.offset, blk.dim) = blk.W2 * v.segment(blk.offset, blk.dim);
  return out;
}

Vec Ipm::conic_product(const Vec& u, const Vec& v) const {
  Vec w(m_);
  w.head(lp_) = u.head(lp_).cwiseProduct(v.head(lp_));
  for (const SocBlock& blk : cones_) {
    const auto uk = u.segment(blk.offset, blk.dim);
    const auto vk = v.segment(blk.offset, blk.dim);
    const Index d1 = blk.dim - 1;
    w[blk.offset] = uk.dot(vk);
    w.segment(blk.offset + 1, d1) = uk[0] * vk.tail(d1) + vk[0] * uk.tail(d1);
  }
  return w;
}

// Solves u o v = w for v.
Vec Ipm::conic_division(const Vec& u, const Vec& w) const {
  Vec v(m_);
  v.head(lp_) = w.head(lp_).cwiseQuotient(u.head(lp_));
  for (const SocBlock& blk : cones_) {
    const auto uk = u.segment(blk.offset, blk.dim);
    const auto wk = w.segment(blk.offset, blk.dim);
    const Index d1 = blk.dim - 1;
    const double rho = uk[0] * uk[0] - uk.tail(d1).squaredNorm();
    const double zeta = uk.tail(d1).dot(wk.tail(d1));
    const double factor = (zeta / uk[0] - wk[0]) / rho;
    v[blk.offset] = (uk[0] * wk[0] - zeta) / rho;
    v.segment(blk.offset + 1, d1) = factor * uk.tail(d1) + wk.tail(d1) / uk[0];
  }
  return v;
}

Vec Ipm::unit() const {
  Vec e = Vec::Zero(m_);
  e.head(lp_).setOnes();
  for (const SocBlock& blk : cones_) e[blk.offset] = 1.0;
  return e;
}

Vec Ipm::bring_to_cone(Vec r) const {
  // Points within a hair of the boundary are shifted too; NT scaling needs strict interiority.
  constexpr double margin = 1e-7;
  double alpha = -st_.gamma;
  for (Index i = 0; i < lp_; ++i)
    if (r[i] <= margin && -r[i] > alpha) alpha = std::max(0.0, -r[i]);
  for (const SocBlock& blk : cones_) {
    const double cres = r[blk.offset] - r.segment(blk.offset + 1, blk.dim - 1).norm();
    if (cres <= margin * std::max(1.0, std::fabs(r[blk.offset])) && -cres > alpha) alpha = std::max(0.0, -cres);
  }
  if (alpha >= 0.0) r += (1.0 + alpha) * unit();
  return r;
}

double Ipm::line_search(const Vec& lambda, const Vec& ds, const Vec& dz, double tau, double dtau, double kap,
                        double dkap) const {
  double alpha = std::numeric_limits<double>::infinity();
  if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
  if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);
  for (Index i = 0; i < lp_; ++i) {
    if (ds[i] < 0.0) alpha = std::min(alpha, -lambda[i] / ds[i]);
    if (dz[i] < 0.0) alpha = std::min(alpha, -lambda[i] / dz[i]);
  }
  for (const SocBlock& blk : cones_) {
    const Index d1 = blk.dim - 1;
    const auto lk = lambda.segment(blk.offset, blk.dim);
    const double lknorm2 = lk[0] * lk[0] - lk.tail(d1).squaredNorm();
    if (lknorm2 <= 0.0) continue;
    const double lknorm = std::sqrt(lknorm2);
    const Vec lkbar = lk / lknorm;
    auto max_step = [&](const Vec& d) {
      const auto dk = d.segment(blk.offset, blk.dim);
      const double lkbar_dk = lkbar[0] * dk[0] - lkbar.tail(d1).dot(dk.tail(d1));
      const double rho0 = lkbar_dk / lknorm;
      const double factor = (lkbar_dk + dk[0]) / (lkbar[0] + 1.0);
      const Vec rho1 = (dk.tail(d1) - factor * lkbar.tail(d1)) / lknorm;
      return rho1.norm() - rho0;
    };
    const double step = std::max({0.0, max_step(ds), max_step(dz)});
    if (step > 0.0) alpha = std::min(alpha, 1.0 / step);
  }
  return std::clamp(alpha, st_.step_min, st_.step_max);
}

IpmResult Ipm::finish(IpmExit exit, const Vec& x, const Vec& y, const Vec& z, const Vec& s, double tau, int iters) {
  IpmResult r;
  r.exit = exit;
  r.iterations = iters;
  r.pres = pres_;
  r.dres = dres_;
  r.gap = gap_;
  r.x = (x / tau).cwiseQuotient(xeq_);
  r.y = (y / tau).cwiseQuotient(aeq_) * cscale_;
  r.z = (z / tau).cwiseQuotient(geq_) * cscale_;
  r.s = (s / tau).cwiseProduct(geq_);
  r.objective = cscale_ * c_.cwiseProduct(xeq_).dot(r.x) + offset_;
  return r;
}

IpmResult Ipm::run() {
  build_kkt();
  write_kkt_scaling();
  if (!factor()) {
    IpmResult r;
    r.exit = IpmExit::Numerics;
    return r;
  }

  const Index dim = n_ + p_ + m_;
  Vec rhs1(dim);
  rhs1 << -c_, b_, h_;

  Vec rhs(dim);
  rhs << Vec::Zero(n_), b_, h_;
  Vec sol = kkt_solve(rhs);
  Vec x = sol.head(n_);
  Vec s = bring_to_cone(-sol.tail(m_));
  rhs << -c_, Vec::Zero(p_), Vec::Zero(m_);
  sol = kkt_solve(rhs);
  Vec y = sol.segment(n_, p_);
  Vec z = bring_to_cone(sol.tail(m_));
  double tau = 1.0, kap = 1.0;

  const double resx0 = std::max(1.0, c_.norm());
  const double resy0 = std::max(1.0, b_.norm());
  const double resz0 = std::max(1.0, h_.norm());

  Vec lambda(m_);
  struct Best {
    bool set = false;
    Vec x, y, z, s;
    double tau = 1.0, pres = 0.0, dres = 0.0, gap = 0.0, merit = std::numeric_limits<double>::infinity();
  } best;

  auto reduced_ok = [&](double pres, double dres, double gap_abs, double relgap) {
    return pres < st_.feastol_inaccurate && dres < st_.feastol_inaccurate &&
           (gap_abs < st_.abstol_inaccurate || relgap < st_.reltol_inaccurate);
  };

  for (int iter = 0;; ++iter) {
    // residuals of the homogeneous embedding
    Vec rx = -(At_ * y) - Gt_ * z;
    const double hresx = rx.norm();
    rx -= tau * c_;
    Vec ry = A_ * x;
    const double hresy = ry.norm();
    ry -= tau * b_;
    Vec rz = s + G_ * x;
    const double hresz = rz.norm();
    rz -= tau * h_;
    const double cx = c_.dot(x), by = b_.dot(y), hz = h_.dot(z);
    const double rt = kap + cx + by + hz;
    const double nx = x.norm(), ny = y.norm(), nz = z.norm(), ns = s.norm();

    const double gap = s.dot(z);
    const double mu = (gap + kap * tau) / (degree_ + 1.0);
    const double pcost = cx / tau;
    const double dcost = -(hz + by) / tau;
    const double gap_scaled = gap / (tau * tau);
    double relgap = kNaN;
    if (pcost < 0.0) {
      relgap = gap_scaled / -pcost;
    } else if (dcost > 0.0) {
      relgap = gap_scaled / dcost;
    }
    pres_ = std::max(ry.norm() / std::max(resy0 + nx, 1.0), rz.norm() / std::max(resz0 + nx + ns, 1.0)) / tau;
    dres_ = rx.norm() / std::max(resx0 + ny + nz, 1.0) / tau;
    gap_ = gap_scaled;
    double pinfres = kNaN, dinfres = kNaN;
    if ((hz + by) / std::max(ny + nz, 1.0) < -st_.reltol) pinfres = hresx / std::max(ny + nz, 1.0);
    if (cx / std::max(nx, 1.0) < -st_.reltol)
      dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));

    const bool gap_ok = gap_scaled < st_.abstol || (!std::isnan(relgap) && relgap < st_.reltol);
    if ((-cx > 0.0 || -by - hz >= -st_.abstol) && pres_ < st_.feastol && dres_ < st_.feastol && gap_ok)
      return finish(IpmExit::Optimal, x, y, z, s, tau, iter);
    if (!std::isnan(dinfres) && dinfres < st_.feastol && tau < kap)
      return finish(IpmExit::DualInfeasible, x, y, z, s, tau, iter);
    if ((!std::isnan(pinfres) && pinfres < st_.feastol && tau < kap) ||
        (tau < st_.feastol && kap < st_.feastol && !std::isnan(pinfres) && pinfres < st_.feastol))
      return finish(IpmExit::PrimalInfeasible, x, y, z, s, tau, iter);

    const double merit = std::max({pres_, dres_, std::isnan(relgap) ? gap_scaled : std::min(gap_scaled, relgap)});
    if (merit < best.merit) {
      best = Best{true, x, y, z, s, tau, pres_, dres_, gap_scaled, merit};
    }
    auto give_up = [&](IpmExit why) {
      if (best.set) {
        pres_ = best.pres;
        dres_ = best.dres;
        gap_ = best.gap;
        const double pc = c_.dot(best.x) / best.tau;
        const double rel = best.gap / std::max(std::fabs(pc), 1e-12);
        if (reduced_ok(best.pres, best.dres, best.gap, rel))
          return finish(IpmExit::ReducedOptimal, best.x, best.y, best.z, best.s, best.tau, iter);
      }
      return finish(why, x, y, z, s, tau, iter);
    };
    if (iter >= st_.max_iterations) return give_up(IpmExit::MaxIterations);

    if (!update_scalings(s, z)) return give_up(IpmExit::Numerics);
    lambda = apply_w(z);
    write_kkt_scaling();
    if (!factor()) return give_up(IpmExit::Numerics);

    // predictor
    const Vec d1 = kkt_solve(rhs1);
    const auto dx1 = d1.head(n_);
    const auto dy1 = d1.segment(n_, p_);
    const Vec dz1 = d1.tail(m_);
    const double dtau_denom = kap / tau - (c_.dot(dx1) + b_.dot(dy1) + h_.dot(dz1));

    Vec rhs2(dim);
    rhs2 << rx, -ry, s - rz;
    Vec d2 = kkt_solve(rhs2);
    const double dtau_aff =
        (rt - kap + c_.dot(d2.head(n_)) + b_.dot(d2.segment(n_, p_)) + h_.dot(d2.tail(m_))) / dtau_denom;
    const Vec dz_aff = d2.tail(m_) + dtau_aff * dz1;
    const Vec w_dz_aff = apply_w(dz_aff);
    const Vec ds_aff_by_w = -w_dz_aff - lambda;
    const double dkap_aff = -kap - kap / tau * dtau_aff;
    const double step_aff = line_search(lambda, ds_aff_by_w, w_dz_aff, tau, dtau_aff, kap, dkap_aff);
    const double sigma = std::clamp(std::pow(1.0 - step_aff, 3.0), st_.sigma_min, st_.sigma_max);

    // corrector
    Vec ds1 = conic_product(lambda, lambda) + conic_product(ds_aff_by_w, w_dz_aff) - sigma * mu * unit();
    const Vec lambda_div = conic_division(lambda, ds1);
    const Vec w_lambda_div = apply_w(lambda_div);
    rhs2 << (1.0 - sigma) * rx, -(1.0 - sigma) * ry, -(1.0 - sigma) * rz + w_lambda_div;
    d2 = kkt_solve(rhs2);
    const double bkap = kap * tau + dkap_aff * dtau_aff - sigma * mu;
    const double dtau = ((1.0 - sigma) * rt - bkap / tau + c_.dot(d2.head(n_)) + b_.dot(d2.segment(n_, p_)) +
                         h_.dot(d2.tail(m_))) /
                        dtau_denom;
    const Vec dx = d2.head(n_) + dtau * dx1;
    const Vec dy = d2.segment(n_, p_) + dtau * dy1;
    const Vec dz = d2.tail(m_) + dtau * dz1;
    const Vec w_dz = apply_w(dz);
    const Vec ds_by_w = -(lambda_div + w_dz);
    const double dkap = -(bkap + kap * dtau) / tau;
    const double alpha = st_.gamma * line_search(lambda, ds_by_w, w_dz, tau, dtau, kap, dkap);
    if (alpha <= st_.gamma * st_.step_min) return give_up(IpmExit::Numerics);
    const Vec ds = apply_w(ds_by_w);

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    kap += alpha * dkap;
    tau += alpha * dtau;
  }
}

}  // namespace

IpmResult solve_standard_form(const StandardForm& sf, const IpmSettings& settings) {
  const Index n = sf.c.size();
  if (sf.A.rows() == 0 && sf.G.rows() == 0) {
    IpmResult r;
    r.x = Eigen::VectorXd::Zero(n);
    r.objective = sf.objective_offset;
    r.exit = (n == 0 || norm_inf(sf.c) == 0.0) ? IpmExit::Optimal : IpmExit::DualInfeasible;
    return r;
  }
  Ipm ipm(sf, settings);
  return ipm.run();
}

}  // namespace pvm::conic
