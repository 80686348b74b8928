#include "gm/grad.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>

namespace gm {

namespace {

class Builder {
 public:
  Builder(Tape& t, const AffinityDecomposition& aff) : t_(t) {
    t_.aff = &aff;
    t_.n = aff.n;
  }

  int input_u() {
    const int id = push_value(t_.aff->u);
    t_.ops.push_back({OpKind::kInputU, -1, -1, id});
    return id;
  }

  int constant(Vec v) {
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kConst, -1, -1, id});
    return id;
  }

  int add_const(int in, double c) {
    Vec v = t_.values[in];
    for (double& x : v) x += c;
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kAddConst, in, -1, id, c});
    return id;
  }

  int row_norm(int in) {
    const int n = t_.n;
    Vec v = t_.values[in];
    for (int i = 0; i < n; ++i) {
      double r = 0.0;
      for (int j = 0; j < n; ++j) r += v[i * n + j];
      for (int j = 0; j < n; ++j) v[i * n + j] /= r;
    }
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kRowNorm, in, -1, id});
    return id;
  }

  int col_norm(int in) {
    const int n = t_.n;
    Vec v = t_.values[in];
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int i = 0; i < n; ++i) c += v[i * n + j];
      for (int i = 0; i < n; ++i) v[i * n + j] /= c;
    }
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kColNorm, in, -1, id});
    return id;
  }

  int matvec_add_u(int in, int u_id) {
    Vec v = t_.aff->matvec(t_.values[in]);
    const Vec& u = t_.values[u_id];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += u[k];
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kMatVecAddU, in, u_id, id});
    return id;
  }

  int matvec_mul_u(int in, int u_id) {
    Vec v = t_.aff->matvec(t_.values[in]);
    const Vec& u = t_.values[u_id];
    const Vec& x = t_.values[in];
    for (std::size_t k = 0; k < v.size(); ++k) v[k] += u[k] * x[k];
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kMatVecMulU, in, u_id, id});
    return id;
  }

  int combo_log(int in_a, int in_z, double ca, double cz, double eps) {
    const Vec& a = t_.values[in_a];
    const Vec& z = t_.values[in_z];
    Vec v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      v[k] = ca * a[k] + cz * std::log(std::max(z[k], eps));
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kComboLog, in_a, in_z, id, ca, cz, eps});
    return id;
  }

  // out = exp(scale * in - shift), shift = max(scale * in). The shift is a
  // detached constant: every taped use feeds a normalization, which cancels
  // a global scale, so the true derivative through the shift is zero.
  int exp_shift(int in, double scale) {
    const Vec& y = t_.values[in];
    double shift = -std::numeric_limits<double>::infinity();
    for (double v : y) shift = std::max(shift, scale * v);
    if (!std::isfinite(shift))
      throw std::runtime_error("tape: non-finite exponent in forward pass");
    Vec v(y.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::exp(scale * y[k] - shift);
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kExpShift, in, -1, id, scale, shift});
    return id;
  }

  // out = exp(scale * in - m_i), m_i the row max of scale * in. A per-row
  // scaling cancels in the next row normalization, so the shift is detached
  // like kExpShift's, but each row keeps its peak at exp(0) no matter how
  // far the rows drift apart.
  int exp_row_shift(int in, double scale) {
    const int n = t_.n;
    const Vec& y = t_.values[in];
    Vec v(y.size());
    for (int i = 0; i < n; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) m = std::max(m, scale * y[i * n + j]);
      if (!std::isfinite(m))
        throw std::runtime_error("tape: non-finite exponent in forward pass");
      for (int j = 0; j < n; ++j) v[i * n + j] = std::exp(scale * y[i * n + j] - m);
    }
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kExpRowShift, in, -1, id, scale});
    return id;
  }

  int l2_norm(int in) {
    const Vec& x = t_.values[in];
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw std::runtime_error("tape: zero vector in l2 normalization");
    Vec v(x.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = x[k] / nrm;
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kL2Norm, in, -1, id, nrm});
    return id;
  }

  int l1_norm(int in) {
    const Vec& x = t_.values[in];
    double s = 0.0;
    for (double v : x) s += v;
    if (!(s > 0.0)) throw std::runtime_error("tape: zero mass in l1 normalization");
    Vec v(x.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = x[k] / s;
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kL1Norm, in, -1, id, s});
    return id;
  }

  int div_max(int in) {
    const Vec& x = t_.values[in];
    int arg = 0;
    for (std::size_t k = 1; k < x.size(); ++k)
      if (x[k] > x[arg]) arg = static_cast<int>(k);
    const double m = x[arg];
    if (!(m > 0.0)) throw std::runtime_error("tape: nonpositive max in div_max");
    Vec v(x.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = x[k] / m;
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kDivMax, in, -1, id, 0, 0, 0, arg});
    return id;
  }

  int scale(int in, double c) {
    Vec v = t_.values[in];
    for (double& x : v) x *= c;
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kScale, in, -1, id, c});
    return id;
  }

  int axpby(int in_a, int in_b, double ca, double cb) {
    const Vec& a = t_.values[in_a];
    const Vec& b = t_.values[in_b];
    Vec v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = ca * a[k] + cb * b[k];
    const int id = push_value(std::move(v));
    t_.ops.push_back({OpKind::kAxpby, in_a, in_b, id, ca, cb});
    return id;
  }

  int sinkhorn(int in, int depth, double eps) {
    int v = add_const(in, eps);
    for (int k = 0; k < depth; ++k) {
      v = row_norm(v);
      v = col_norm(v);
    }
    return v;
  }

 private:
  int push_value(Vec v) {
    t_.values.push_back(std::move(v));
    return static_cast<int>(t_.values.size()) - 1;
  }

  Tape& t_;
};

void record_dpgm(Builder& b, Tape& t, const AffinityDecomposition& aff,
                 const UnrollSpec& spec) {
  const SolverParams& sp = spec.solver;
  const double sink_eps = SinkhornConfig{}.epsilon;
  const int u_id = b.input_u();
  bool has_unary = false;
  for (double v : aff.u)
    if (v != 0.0) {
      has_unary = true;
      break;
    }
  int z;
  if (has_unary) {
    // Mirrors init_state: its standalone projection runs a deep fixed sweep.
    z = b.sinkhorn(u_id, std::max(sp.sinkhorn_iters, 1000), sink_eps);
  } else {
    z = b.constant(MatchingState::uniform(aff.n).z);
  }
  for (int it = 0; it < spec.iters; ++it) {
    const double beta = sp.beta_at(it);
    const double c1 = beta / (1.0 + sp.lambda * beta);
    const double c2 = 1.0 / (1.0 + sp.lambda * beta);
    const int a = b.matvec_add_u(z, u_id);
    const int y = b.combo_log(a, z, c1, c2, sp.epsilon_log);
    const int e = b.exp_shift(y, 1.0);
    z = b.sinkhorn(e, sp.sinkhorn_iters, sink_eps);
  }
  t.output = z;
}

void record_sm(Builder& b, Tape& t, const AffinityDecomposition& aff,
               const UnrollSpec& spec) {
  const int u_id = b.input_u();
  int x = b.constant(Vec(static_cast<std::size_t>(aff.n) * aff.n, 1.0 / aff.n));
  for (int it = 0; it < spec.iters; ++it) {
    const int y = b.matvec_mul_u(x, u_id);
    x = b.l2_norm(y);
  }
  t.output = x;
}

void record_rrwm(Builder& b, Tape& t, const AffinityDecomposition& aff,
                 const UnrollSpec& spec) {
  const BaselineConfig& bc = spec.baseline;
  const int n = aff.n;
  const int u_id = b.input_u();
  int x = b.constant(Vec(static_cast<std::size_t>(n) * n,
                         1.0 / (static_cast<double>(n) * n)));
  for (int it = 0; it < spec.iters; ++it) {
    const int y = b.matvec_mul_u(x, u_id);
    const int w = b.l1_norm(y);
    const int d = b.div_max(w);
    const int e = b.exp_shift(d, bc.rrwm_beta);
    const int q = b.sinkhorn(e, bc.sinkhorn_iters, bc.epsilon);
    const int j = b.scale(q, 1.0 / n);
    x = b.axpby(w, j, 1.0 - bc.rrwm_alpha, bc.rrwm_alpha);
  }
  t.output = x;
}

void record_gagm(Builder& b, Tape& t, const AffinityDecomposition& aff,
                 const UnrollSpec& spec) {
  const BaselineConfig& bc = spec.baseline;
  const int u_id = b.input_u();
  int z = b.constant(MatchingState::uniform(aff.n).z);
  // Fixed unroll depth truncates the anneal; beta holds at the cap once the
  // schedule is exhausted.
  double beta = bc.gagm_beta0;
  for (int it = 0; it < spec.iters; ++it) {
    const int a = b.matvec_add_u(z, u_id);
    const int e = b.exp_row_shift(a, beta);
    z = b.sinkhorn(e, bc.sinkhorn_iters, bc.epsilon);
    if (beta * bc.gagm_growth <= bc.gagm_beta_max) beta *= bc.gagm_growth;
  }
  t.output = z;
}

}  // namespace

Tape taped_forward(const AffinityDecomposition& aff, const UnrollSpec& spec) {
  // Shape-only validation: finite-difference probes may push single
  // coordinates slightly negative, and the unrolled map stays well defined.
  aff.validate_shape();
  spec.solver.validate();
  spec.baseline.validate();
  if (spec.iters < 1) throw std::invalid_argument("taped_forward: iters must be >= 1");
  if (aff.n < 1) throw std::invalid_argument("taped_forward: empty instance");

  Tape t;
  Builder b(t, aff);
  switch (spec.method) {
    case Method::Dpgm: record_dpgm(b, t, aff, spec); break;
    case Method::Sm: record_sm(b, t, aff, spec); break;
    case Method::Rrwm: record_rrwm(b, t, aff, spec); break;
    case Method::Gagm: record_gagm(b, t, aff, spec); break;
    case Method::Ipfp:
      throw std::invalid_argument("taped_forward: ipfp is not differentiable");
  }
  t.fixed_depth = true;
  return t;
}

AffinityGrad Tape::backward(const Vec& dLdz) const {
  if (!fixed_depth)
    throw std::runtime_error("tape: recorded with early stopping, gradients undefined");
  if (output < 0) throw std::runtime_error("tape: no output recorded");
  const std::size_t m = static_cast<std::size_t>(n) * n;
  if (dLdz.size() != m) throw std::invalid_argument("tape: upstream gradient size");
  assert(aff != nullptr);

  std::vector<Vec> adj(values.size());
  auto acc = [&](int id) -> Vec& {
    if (adj[id].empty()) adj[id].assign(m, 0.0);
    return adj[id];
  };
  acc(output) = dLdz;

  AffinityGrad g;
  g.du.assign(m, 0.0);
  g.dP.assign(aff->entries.size(), 0.0);

  for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
    const TapeOp& op = *it;
    if (adj[op.out].empty()) continue;  // nothing flowed back to this value
    const Vec& go = adj[op.out];
    switch (op.kind) {
      case OpKind::kInputU: {
        for (std::size_t k = 0; k < m; ++k) g.du[k] += go[k];
        break;
      }
      case OpKind::kConst:
        break;
      case OpKind::kAddConst: {
        Vec& gi = acc(op.in0);
        for (std::size_t k = 0; k < m; ++k) gi[k] += go[k];
        break;
      }
      case OpKind::kRowNorm: {
        const Vec& in = values[op.in0];
        const Vec& out = values[op.out];
        Vec& gi = acc(op.in0);
        for (int i = 0; i < n; ++i) {
          double r = 0.0, dot = 0.0;
          for (int j = 0; j < n; ++j) {
            r += in[i * n + j];
            dot += go[i * n + j] * out[i * n + j];
          }
          for (int j = 0; j < n; ++j) gi[i * n + j] += (go[i * n + j] - dot) / r;
        }
        break;
      }
      case OpKind::kColNorm: {
        const Vec& in = values[op.in0];
        const Vec& out = values[op.out];
        Vec& gi = acc(op.in0);
        for (int j = 0; j < n; ++j) {
          double c = 0.0, dot = 0.0;
          for (int i = 0; i < n; ++i) {
            c += in[i * n + j];
            dot += go[i * n + j] * out[i * n + j];
          }
          for (int i = 0; i < n; ++i) gi[i * n + j] += (go[i * n + j] - dot) / c;
        }
        break;
      }
      case OpKind::kMatVecAddU: {
        const Vec& zin = values[op.in0];
        Vec& gi = acc(op.in0);
        Vec back;
        aff->matvec(go, back);  // P symmetric
        for (std::size_t k = 0; k < m; ++k) gi[k] += back[k];
        Vec& gu = acc(op.in1);
        for (std::size_t k = 0; k < m; ++k) gu[k] += go[k];
        for (std::size_t e = 0; e < aff->entries.size(); ++e) {
          const PairEntry& pe = aff->entries[e];
          const int p = pe.g1_a * n + pe.g2_a;
          const int q = pe.g1_b * n + pe.g2_b;
          g.dP[e] += go[p] * zin[q] + go[q] * zin[p];
        }
        break;
      }
      case OpKind::kMatVecMulU: {
        const Vec& xin = values[op.in0];
        const Vec& u = values[op.in1];
        Vec& gi = acc(op.in0);
        Vec back;
        aff->matvec(go, back);
        for (std::size_t k = 0; k < m; ++k) gi[k] += back[k] + u[k] * go[k];
        Vec& gu = acc(op.in1);
        for (std::size_t k = 0; k < m; ++k) gu[k] += xin[k] * go[k];
        for (std::size_t e = 0; e < aff->entries.size(); ++e) {
          const PairEntry& pe = aff->entries[e];
          const int p = pe.g1_a * n + pe.g2_a;
          const int q = pe.g1_b * n + pe.g2_b;
          g.dP[e] += go[p] * xin[q] + go[q] * xin[p];
        }
        break;
      }
      case OpKind::kComboLog: {
        const Vec& zin = values[op.in1];
        Vec& ga = acc(op.in0);
        for (std::size_t k = 0; k < m; ++k) ga[k] += op.c0 * go[k];
        Vec& gz = acc(op.in1);
        for (std::size_t k = 0; k < m; ++k)
          if (zin[k] >= op.c2) gz[k] += op.c1 * go[k] / zin[k];
        break;
      }
      case OpKind::kExpShift:
      case OpKind::kExpRowShift: {
        const Vec& out = values[op.out];
        Vec& gi = acc(op.in0);
        for (std::size_t k = 0; k < m; ++k) gi[k] += op.c0 * out[k] * go[k];
        break;
      }
      case OpKind::kL2Norm: {
        const Vec& out = values[op.out];
        Vec& gi = acc(op.in0);
        double dot = 0.0;
        for (std::size_t k = 0; k < m; ++k) dot += go[k] * out[k];
        for (std::size_t k = 0; k < m; ++k) gi[k] += (go[k] - dot * out[k]) / op.c0;
        break;
      }
      case OpKind::kL1Norm: {
        const Vec& out = values[op.out];
        Vec& gi = acc(op.in0);
        double dot = 0.0;
        for (std::size_t k = 0; k < m; ++k) dot += go[k] * out[k];
        for (std::size_t k = 0; k < m; ++k) gi[k] += (go[k] - dot) / op.c0;
        break;
      }
      case OpKind::kDivMax: {
        const Vec& in = values[op.in0];
        const Vec& out = values[op.out];
        const double mx = in[op.aux];
        Vec& gi = acc(op.in0);
        double dot = 0.0;
        for (std::size_t k = 0; k < m; ++k) dot += go[k] * out[k];
        for (std::size_t k = 0; k < m; ++k) gi[k] += go[k] / mx;
        gi[op.aux] -= dot / mx;
        break;
      }
      case OpKind::kScale: {
        Vec& gi = acc(op.in0);
        for (std::size_t k = 0; k < m; ++k) gi[k] += op.c0 * go[k];
        break;
      }
      case OpKind::kAxpby: {
        Vec& ga = acc(op.in0);
        for (std::size_t k = 0; k < m; ++k) ga[k] += op.c0 * go[k];
        Vec& gb = acc(op.in1);
        for (std::size_t k = 0; k < m; ++k) gb[k] += op.c1 * go[k];
        break;
      }
    }
  }
  return g;
}

double LossSpec::eval(const Vec& z, int n, Vec& dLdz) const {
  const std::size_t m = static_cast<std::size_t>(n) * n;
  if (z.size() != m) throw std::invalid_argument("loss: size mismatch");
  dLdz.assign(m, 0.0);
  if (kind == Kind::WeightedSum) {
    if (r.size() != m) throw std::invalid_argument("loss: weight size mismatch");
    double L = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      L += r[k] * z[k];
      dLdz[k] = r[k];
    }
    return L;
  }
  if (static_cast<int>(truth.size()) != n)
    throw std::invalid_argument("loss: truth size mismatch");
  const double lo = clamp, hi = 1.0 - clamp;
  double L = 0.0;
  for (int i = 0; i < n; ++i) {
    if (truth[i] < 0) continue;  // masked row
    for (int j = 0; j < n; ++j) {
      const double target = truth[i] == j ? 1.0 : 0.0;
      const double raw = z[i * n + j];
      const double v = std::min(std::max(raw, lo), hi);
      L -= target * std::log(v) + (1.0 - target) * std::log(1.0 - v);
      if (raw >= lo && raw <= hi)
        dLdz[i * n + j] = -target / v + (1.0 - target) / (1.0 - v);
    }
  }
  return L;
}

double finite_diff_check(const AffinityDecomposition& aff, const UnrollSpec& spec,
                         const LossSpec& loss, double h, int min_coords,
                         std::uint64_t seed) {
  if (!(h >= 1e-7 && h <= 1e-3))
    throw std::invalid_argument("finite_diff_check: h outside [1e-7, 1e-3]");

  Tape tape = taped_forward(aff, spec);
  Vec dLdz;
  loss.eval(tape.out(), aff.n, dLdz);
  const AffinityGrad g = tape.backward(dLdz);

  const std::size_t nu = aff.u.size(), np = aff.entries.size();
  std::vector<std::size_t> coords;  // [0, nu) = u, [nu, nu+np) = P weights
  std::mt19937_64 rng(seed);
  const std::size_t total = nu + np;
  if (total <= static_cast<std::size_t>(min_coords)) {
    for (std::size_t k = 0; k < total; ++k) coords.push_back(k);
  } else {
    // Half from u, half from P when both exist.
    const std::size_t want_u = np == 0 ? static_cast<std::size_t>(min_coords)
                                       : static_cast<std::size_t>(min_coords) / 2;
    const std::size_t want_p = static_cast<std::size_t>(min_coords) - std::min(want_u, nu);
    std::vector<std::size_t> pool_u(nu), pool_p(np);
    for (std::size_t k = 0; k < nu; ++k) pool_u[k] = k;
    for (std::size_t k = 0; k < np; ++k) pool_p[k] = nu + k;
    std::shuffle(pool_u.begin(), pool_u.end(), rng);
    std::shuffle(pool_p.begin(), pool_p.end(), rng);
    coords.assign(pool_u.begin(), pool_u.begin() + std::min(want_u, nu));
    for (std::size_t k = 0; k < std::min(want_p, np); ++k) coords.push_back(pool_p[k]);
  }

  auto loss_at = [&](const AffinityDecomposition& a) {
    Tape t = taped_forward(a, spec);
    Vec unused;
    return loss.eval(t.out(), a.n, unused);
  };

  double worst = 0.0;
  AffinityDecomposition pert = aff;
  for (std::size_t c : coords) {
    double* slot = c < nu ? &pert.u[c] : &pert.entries[c - nu].w;
    const double base = *slot;
    *slot = base + h;
    const double fp = loss_at(pert);
    *slot = base - h;
    const double fm = loss_at(pert);
    *slot = base;
    const double fd = (fp - fm) / (2.0 * h);
    const double ad = c < nu ? g.du[c] : g.dP[c - nu];
    const double denom = std::max({std::abs(fd), std::abs(ad), 1e-8});
    worst = std::max(worst, std::abs(fd - ad) / denom);
  }
  return worst;
}

}  // namespace gm
