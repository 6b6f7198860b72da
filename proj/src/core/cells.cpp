// SPDX-License-Identifier: Apache-2.0
#include "core/cells.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "core/rng.hpp"
#include "core/serialize.hpp"

namespace fw {

const char* cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::Feedforward: return "feedforward";
    case CellKind::Elman: return "elman";
    case CellKind::AdditiveFwp: return "additive";
    case CellKind::DeltaFwp: return "delta";
    case CellKind::RecurrentHybridFwp: return "hybrid";
  }
  return "unknown";
}

std::optional<CellKind> cell_kind_from_name(const std::string& name) {
  for (CellKind k : {CellKind::Feedforward, CellKind::Elman, CellKind::AdditiveFwp, CellKind::DeltaFwp,
                     CellKind::RecurrentHybridFwp}) {
    if (name == cell_kind_name(k)) return k;
  }
  return std::nullopt;
}

std::size_t CellConfig::slow_in() const {
  return kind == CellKind::RecurrentHybridFwp ? d_in + d_out : d_in;
}

std::size_t CellConfig::slow_out() const { return d_in + d_out + (has_beta() ? 1 : 0); }

bool CellConfig::is_fwp() const {
  return kind == CellKind::AdditiveFwp || kind == CellKind::DeltaFwp || kind == CellKind::RecurrentHybridFwp;
}

bool CellConfig::has_beta() const {
  return kind == CellKind::DeltaFwp || kind == CellKind::RecurrentHybridFwp;
}

bool CellConfig::has_h() const {
  return kind == CellKind::Elman || kind == CellKind::RecurrentHybridFwp;
}

void CellConfig::validate() const {
  if (d_in == 0 || d_out == 0) raise(Status::ConfigInvalid, "cell dimensions must be positive");
}

CellParams make_cell_params(const CellConfig& cfg) {
  cfg.validate();
  CellParams p;
  p.cfg = cfg;
  switch (cfg.kind) {
    case CellKind::Feedforward:
      p.W = Matrix(cfg.d_out, cfg.d_in);
      break;
    case CellKind::Elman:
      p.W = Matrix(cfg.d_out, cfg.d_in);
      p.R = Matrix(cfg.d_out, cfg.d_out);
      break;
    default:
      p.A = Matrix(cfg.slow_out(), cfg.slow_in());
      break;
  }
  return p;
}

CellParams init_cell_params(const CellConfig& cfg, std::uint64_t seed) {
  CellParams p = make_cell_params(cfg);
  SplitMix64 rng(seed);
  for (Matrix* m : param_list(p)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m->cols));
    for (double& x : m->data) x = rng.uniform(-bound, bound);
  }
  return p;
}

std::vector<Matrix*> param_list(CellParams& p) {
  std::vector<Matrix*> out;
  if (!p.W.empty()) out.push_back(&p.W);
  if (!p.R.empty()) out.push_back(&p.R);
  if (!p.A.empty()) out.push_back(&p.A);
  return out;
}

std::vector<const Matrix*> param_list(const CellParams& p) {
  std::vector<const Matrix*> out;
  if (!p.W.empty()) out.push_back(&p.W);
  if (!p.R.empty()) out.push_back(&p.R);
  if (!p.A.empty()) out.push_back(&p.A);
  return out;
}

CellGrads make_cell_grads(const CellConfig& cfg) {
  CellParams shapes = make_cell_params(cfg);
  return CellGrads{std::move(shapes.W), std::move(shapes.R), std::move(shapes.A)};
}

std::vector<Matrix*> grad_list(CellGrads& g) {
  std::vector<Matrix*> out;
  if (!g.dW.empty()) out.push_back(&g.dW);
  if (!g.dR.empty()) out.push_back(&g.dR);
  if (!g.dA.empty()) out.push_back(&g.dA);
  return out;
}

std::vector<const Matrix*> grad_list(const CellGrads& g) {
  std::vector<const Matrix*> out;
  if (!g.dW.empty()) out.push_back(&g.dW);
  if (!g.dR.empty()) out.push_back(&g.dR);
  if (!g.dA.empty()) out.push_back(&g.dA);
  return out;
}

CellState make_cell_state(const CellConfig& cfg) {
  CellState s;
  if (cfg.has_h()) s.h = Vector(cfg.d_out, 0.0);
  if (cfg.is_fwp()) s.w_fast = Matrix(cfg.d_out, cfg.d_in);
  return s;
}

Vector apply_key_map(KeyMap map, const Vector& k) {
  switch (map) {
    case KeyMap::Identity:
      return k;
    case KeyMap::ReluL1: {
      Vector r(k.size());
      double s = 0.0;
      for (std::size_t i = 0; i < k.size(); ++i) {
        r[i] = k[i] > 0.0 ? k[i] : 0.0;
        s += r[i];
      }
      const double denom = std::max(s, kKeyNormFloor);
      for (double& x : r) x /= denom;
      return r;
    }
  }
  raise(Status::ConfigInvalid, "unknown key map");
}

Vector key_map_vjp(KeyMap map, const Vector& k, const Vector& upstream) {
  switch (map) {
    case KeyMap::Identity:
      return upstream;
    case KeyMap::ReluL1: {
      Vector r(k.size());
      double s = 0.0;
      for (std::size_t i = 0; i < k.size(); ++i) {
        r[i] = k[i] > 0.0 ? k[i] : 0.0;
        s += r[i];
      }
      Vector g(k.size(), 0.0);
      if (s > kKeyNormFloor) {
        double up_phi = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) up_phi += upstream[i] * (r[i] / s);
        for (std::size_t i = 0; i < k.size(); ++i)
          if (k[i] > 0.0) g[i] = (upstream[i] - up_phi) / s;
      } else {
        // Below the floor the denominator is a constant.
        for (std::size_t i = 0; i < k.size(); ++i)
          if (k[i] > 0.0) g[i] = upstream[i] / kKeyNormFloor;
      }
      return g;
    }
  }
  raise(Status::ConfigInvalid, "unknown key map");
}

namespace {

void check_input(const CellParams& p, const Vector& x) {
  if (x.size() != p.cfg.d_in)
    raise(Status::ShapeMismatch, std::string(cell_kind_name(p.cfg.kind)) + " step: input length " +
                                     std::to_string(x.size()) + ", expected " + std::to_string(p.cfg.d_in));
}

// Splits the slow-net output into key / value / beta_hat.
void split_slow_out(const CellConfig& cfg, const Vector& kv, Vector& k, Vector& v, double& beta_hat) {
  k.assign(kv.begin(), kv.begin() + static_cast<long>(cfg.d_in));
  v.assign(kv.begin() + static_cast<long>(cfg.d_in), kv.begin() + static_cast<long>(cfg.d_in + cfg.d_out));
  beta_hat = cfg.has_beta() ? kv.back() : 0.0;
}

// Shared delta-rule write: mutates w in place and records everything the
// backward pass needs.
void delta_write(const CellParams& p, Matrix& w, const Vector& slow_in, StepRecord* rec) {
  const CellConfig& cfg = p.cfg;
  const Vector kv = matvec(p.A, slow_in);
  Vector k_raw, v;
  double beta_hat = 0.0;
  split_slow_out(cfg, kv, k_raw, v, beta_hat);

  const Vector k_feat = apply_key_map(cfg.key_map, k_raw);
  const double n = norm2(k_feat);
  const double denom = std::max(n, kKeyNormFloor);
  Vector k_unit = k_feat;
  scale(k_unit, 1.0 / denom);

  const bool forced = cfg.beta_override.has_value();
  const double beta = forced ? *cfg.beta_override : sigmoid(beta_hat);

  Vector err = matvec(w, k_unit);       // W_{t-1} kbar
  for (std::size_t i = 0; i < err.size(); ++i) err[i] = v[i] - err[i];
  add_outer(w, beta, err, k_unit);      // W_t = W_{t-1} + beta (v - W_{t-1} kbar) kbar^T

  if (rec) {
    rec->k_raw = k_raw;
    rec->k_feat = k_feat;
    rec->k_unit = k_unit;
    rec->key_norm = n;
    rec->v = v;
    rec->beta_hat = beta_hat;
    rec->beta = beta;
    rec->beta_forced = forced;
    rec->retrieval_err = std::move(err);
  }
}

}  // namespace

Vector cell_step(const CellParams& p, CellState& state, const Vector& x, StepRecord* rec) {
  const CellConfig& cfg = p.cfg;
  check_input(p, x);
  if (rec) {
    *rec = StepRecord{};
    rec->kind = cfg.kind;
    rec->x = x;
  }

  Vector z;
  switch (cfg.kind) {
    case CellKind::Feedforward:
      z = matvec(p.W, x);
      break;
    case CellKind::Elman: {
      if (!state.h) raise(Status::ShapeMismatch, "elman step: state has no activation vector");
      z = matvec(p.W, x);
      add_inplace(z, matvec(p.R, *state.h));
      if (rec) rec->h_prev = *state.h;
      break;
    }
    case CellKind::AdditiveFwp: {
      if (!state.w_fast) raise(Status::ShapeMismatch, "fwp step: state has no fast weights");
      const Vector kv = matvec(p.A, x);
      Vector k_raw, v;
      double beta_hat = 0.0;
      split_slow_out(cfg, kv, k_raw, v, beta_hat);
      const Vector k_feat = apply_key_map(cfg.key_map, k_raw);
      add_outer(*state.w_fast, 1.0, v, k_feat);
      if (rec) {
        rec->k_raw = k_raw;
        rec->k_feat = k_feat;
        rec->v = v;
      }
      z = matvec(*state.w_fast, x);
      break;
    }
    case CellKind::DeltaFwp: {
      if (!state.w_fast) raise(Status::ShapeMismatch, "fwp step: state has no fast weights");
      delta_write(p, *state.w_fast, x, rec, nullptr, nullptr, nullptr);
      z = matvec(*state.w_fast, x);
      break;
    }
    case CellKind::RecurrentHybridFwp: {
      if (!state.w_fast || !state.h) raise(Status::ShapeMismatch, "hybrid step: incomplete state");
      const Vector slow_in = concat(x, *state.h);
      if (rec) {
        rec->h_prev = *state.h;
        rec->slow_in = slow_in;
      }
      delta_write(p, *state.w_fast, slow_in, rec, nullptr, nullptr, nullptr);
      z = matvec(*state.w_fast, x);
      break;
    }
  }

  Vector y = activate(cfg.activation, z);
  if (cfg.has_h()) state.h = y;
  if (rec) {
    if (rec->slow_in.empty()) rec->slow_in = x;
    rec->z = std::move(z);
    rec->y = y;
  }
  return y;
}

Vector step_feedforward(const CellParams& p, const Vector& x) {
  CellState s = make_cell_state(p.cfg);
  return cell_step(p, s, x);
}

std::pair<Vector, Vector> step_elman(const CellParams& p, const Vector& h_prev, const Vector& x) {
  CellState s = make_cell_state(p.cfg);
  if (h_prev.size() != p.cfg.d_out) raise(Status::ShapeMismatch, "elman step: bad h_prev length");
  s.h = h_prev;
  Vector y = cell_step(p, s, x);
  return {*s.h, std::move(y)};
}

std::pair<Matrix, Vector> step_additive_fwp(const CellParams& p, const Matrix& w_prev, const Vector& x) {
  CellState s = make_cell_state(p.cfg);
  if (w_prev.rows != p.cfg.d_out || w_prev.cols != p.cfg.d_in)
    raise(Status::ShapeMismatch, "fwp step: bad fast-weight shape");
  s.w_fast = w_prev;
  Vector y = cell_step(p, s, x);
  return {std::move(*s.w_fast), std::move(y)};
}

std::pair<Matrix, Vector> step_delta_fwp(const CellParams& p, const Matrix& w_prev, const Vector& x) {
  CellState s = make_cell_state(p.cfg);
  if (w_prev.rows != p.cfg.d_out || w_prev.cols != p.cfg.d_in)
    raise(Status::ShapeMismatch, "fwp step: bad fast-weight shape");
  s.w_fast = w_prev;
  Vector y = cell_step(p, s, x);
  return {std::move(*s.w_fast), std::move(y)};
}

std::pair<CellState, Vector> step_hybrid_fwp(const CellParams& p, const CellState& state, const Vector& x) {
  CellState s = state;
  Vector y = cell_step(p, s, x);
  return {std::move(s), std::move(y)};
}

void reapply_fast_write(const CellConfig& cfg, Matrix& w, const StepRecord& rec) {
  if (cfg.kind == CellKind::AdditiveFwp) {
    add_outer(w, 1.0, rec.v, rec.k_feat);
  } else {
    // Delta-style write from recorded quantities; same operands and order as
    // the forward pass, so the replay is bit-identical.
    add_outer(w, rec.beta, rec.retrieval_err, rec.k_unit);
  }
}

void step_backward(const CellParams& p, const StepRecord& rec, const Matrix* w_prev, const Matrix* w_curr,
                   const Vector& d_y, StateCotangent& d_state, CellGrads& grads, Vector* d_x,
                   Vector* d_v_capture) {
  const CellConfig& cfg = p.cfg;
  if (rec.kind != cfg.kind)
    raise(Status::RecordMismatch, std::string("step_backward: record from ") + cell_kind_name(rec.kind) +
                                      " fed to " + cell_kind_name(cfg.kind));
  if (d_y.size() != cfg.d_out) raise(Status::ShapeMismatch, "step_backward: bad cotangent length");

  switch (cfg.kind) {
    case CellKind::Feedforward: {
      const Vector dz = activate_vjp(cfg.activation, rec.z, d_y);
      add_outer(grads.dW, 1.0, dz, rec.x);
      if (d_x) *d_x = matvec_t(p.W, dz);
      return;
    }
    case CellKind::Elman: {
      Vector dh = d_y;
      if (!d_state.d_h.empty()) add_inplace(dh, d_state.d_h);
      const Vector dz = activate_vjp(cfg.activation, rec.z, dh);
      add_outer(grads.dW, 1.0, dz, rec.x);
      add_outer(grads.dR, 1.0, dz, rec.h_prev);
      d_state.d_h = matvec_t(p.R, dz);
      if (d_x) *d_x = matvec_t(p.W, dz);
      return;
    }
    case CellKind::AdditiveFwp: {
      if (!w_curr) raise(Status::RecordMismatch, "additive backward: missing W_t");
      const Vector dz = activate_vjp(cfg.activation, rec.z, d_y);
      if (d_state.d_w.empty()) d_state.d_w = Matrix(cfg.d_out, cfg.d_in);
      add_outer(d_state.d_w, 1.0, dz, rec.x);  // readout contribution
      Vector dx = matvec_t(*w_curr, dz);

      // W_t = W_{t-1} + v (x) k_feat: the weight cotangent passes through
      // unchanged; the write only sheds gradients into v and k.
      const Vector dv = matvec(d_state.d_w, rec.k_feat);
      const Vector dk_feat = matvec_t(d_state.d_w, rec.v);
      if (d_v_capture) *d_v_capture = dv;

      const Vector dk_raw = key_map_vjp(cfg.key_map, rec.k_raw, dk_feat);
      const Vector dkv = concat(dk_raw, dv);
      add_outer(grads.dA, 1.0, dkv, rec.x);
      add_inplace(dx, matvec_t(p.A, dkv));
      if (d_x) *d_x = std::move(dx);
      return;
    }
    case CellKind::DeltaFwp:
    case CellKind::RecurrentHybridFwp: {
      if (!w_prev || !w_curr) raise(Status::RecordMismatch, "delta backward: missing weight snapshots");
      const bool hybrid = cfg.kind == CellKind::RecurrentHybridFwp;

      Vector dy_total = d_y;
      if (hybrid && !d_state.d_h.empty()) add_inplace(dy_total, d_state.d_h);  // h_t = y_t
      const Vector dz = activate_vjp(cfg.activation, rec.z, dy_total);

      if (d_state.d_w.empty()) d_state.d_w = Matrix(cfg.d_out, cfg.d_in);
      add_outer(d_state.d_w, 1.0, dz, rec.x);
      Vector dx = matvec_t(*w_curr, dz);

      // W_t = W_{t-1} + beta * err (x) kbar, err = v - W_{t-1} kbar.
      const Vector dw_k = matvec(d_state.d_w, rec.k_unit);
      const double d_beta = dot(rec.retrieval_err, dw_k);
      Vector d_err = dw_k;
      scale(d_err, rec.beta);
      Vector d_k_unit = matvec_t(d_state.d_w, rec.retrieval_err);
      scale(d_k_unit, rec.beta);
      const Vector d_k_unit_from_err = matvec_t(*w_prev, d_err);
      for (std::size_t i = 0; i < d_k_unit.size(); ++i) d_k_unit[i] -= d_k_unit_from_err[i];
      const Vector& dv = d_err;  // err = v - ...
      if (d_v_capture) *d_v_capture = dv;

      // Incoming weight cotangent: identity path minus the retrieval path.
      add_outer(d_state.d_w, -1.0, d_err, rec.k_unit);

      // Back through kbar = k_feat / max(||k_feat||, floor).
      Vector dk_feat;
      if (rec.key_norm > kKeyNormFloor) {
        const double proj = dot(rec.k_unit, d_k_unit);
        dk_feat = d_k_unit;
        for (std::size_t i = 0; i < dk_feat.size(); ++i)
          dk_feat[i] = (dk_feat[i] - rec.k_unit[i] * proj) / rec.key_norm;
      } else {
        dk_feat = d_k_unit;
        scale(dk_feat, 1.0 / kKeyNormFloor);
      }
      const Vector dk_raw = key_map_vjp(cfg.key_map, rec.k_raw, dk_feat);

      const double d_beta_hat = rec.beta_forced ? 0.0 : rec.beta * (1.0 - rec.beta) * d_beta;
      Vector dkvb = concat(dk_raw, dv);
      dkvb.push_back(d_beta_hat);

      add_outer(grads.dA, 1.0, dkvb, rec.slow_in);
      const Vector d_slow_in = matvec_t(p.A, dkvb);
      for (std::size_t i = 0; i < cfg.d_in; ++i) dx[i] += d_slow_in[i];
      if (hybrid) {
        d_state.d_h.assign(d_slow_in.begin() + static_cast<long>(cfg.d_in), d_slow_in.end());
      }
      if (d_x) *d_x = std::move(dx);
      return;
    }
  }
  raise(Status::ConfigInvalid, "unknown cell kind");
}

// --- checkpoint file ---------------------------------------------------------

namespace {
constexpr std::uint64_t kCellMagic = 0x31504357ull;  // "WCP1"
}

void write_cell(std::ostream& out, const CellParams& p) {
  write_u64_le(out, kCellMagic);
  write_u64_le(out, static_cast<std::uint64_t>(p.cfg.kind));
  write_u64_le(out, static_cast<std::uint64_t>(p.cfg.activation));
  write_u64_le(out, static_cast<std::uint64_t>(p.cfg.key_map));
  write_u64_le(out, p.cfg.d_in);
  write_u64_le(out, p.cfg.d_out);
  for (const Matrix* m : param_list(p)) write_matrix(out, *m);
}

CellParams read_cell(std::istream& in) {
  if (read_u64_le(in) != kCellMagic) raise(Status::IoError, "not a cell checkpoint");
  CellConfig cfg;
  const std::uint64_t kind = read_u64_le(in);
  if (kind > static_cast<std::uint64_t>(CellKind::RecurrentHybridFwp))
    raise(Status::IoError, "bad cell kind tag");
  cfg.kind = static_cast<CellKind>(kind);
  const std::uint64_t act = read_u64_le(in);
  if (act > static_cast<std::uint64_t>(Activation::SoftmaxOverOutput)) raise(Status::IoError, "bad activation tag");
  cfg.activation = static_cast<Activation>(act);
  const std::uint64_t km = read_u64_le(in);
  if (km > static_cast<std::uint64_t>(KeyMap::ReluL1)) raise(Status::IoError, "bad key map tag");
  cfg.key_map = static_cast<KeyMap>(km);
  cfg.d_in = read_u64_le(in);
  cfg.d_out = read_u64_le(in);

  CellParams p = make_cell_params(cfg);
  for (Matrix* m : param_list(p)) {
    Matrix loaded = read_matrix(in);
    if (loaded.rows != m->rows || loaded.cols != m->cols)
      raise(Status::IoError, "checkpoint matrix shape does not match header");
    *m = std::move(loaded);
  }
  return p;
}

void save_cell(const std::string& path, const CellParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Status::IoError, "cannot open for writing: " + path);
  write_cell(out, p);
}

CellParams load_cell(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Status::IoError, "cannot open for reading: " + path);
  return read_cell(in);
}

}  // namespace fw
