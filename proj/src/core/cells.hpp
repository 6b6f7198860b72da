// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/linalg.hpp"

namespace fw {

// Sequence cells as pure step functions (params, state, x_t) -> (state', y_t)
// with hand-derived reverse-mode step gradients.
//
// Two kinds of short-term memory appear here: an activation vector carried
// across steps (Elman) and a fast weight matrix rewritten at every step by a
// slow network (the FWP kinds). The hybrid keeps both.

enum class CellKind {
  Feedforward = 0,        // y_t = sigma(W x_t), no state
  Elman = 1,              // y_t = sigma(W x_t + R y_{t-1})
  AdditiveFwp = 2,        // W_t = W_{t-1} + v_t (x) k_t;   y_t = sigma(W_t x_t)
  DeltaFwp = 3,           // W_t = W_{t-1} + beta_t (v_t - W_{t-1} kbar_t) (x) kbar_t
  RecurrentHybridFwp = 4, // delta rule, slow net fed [x_t, y_{t-1}]
};

const char* cell_kind_name(CellKind k);
std::optional<CellKind> cell_kind_from_name(const std::string& name);

// Feature map applied to raw keys before they touch the fast weights.
// Identity keeps the attention-form identity exact; ReluL1 is the classic
// non-negative normalised map.
enum class KeyMap { Identity = 0, ReluL1 = 1 };

// Norm floor for key normalisation (delta/hybrid l2, ReluL1 l1).
inline constexpr double kKeyNormFloor = 1e-8;

struct CellConfig {
  CellKind kind = CellKind::Feedforward;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  Activation activation = Activation::Tanh;
  KeyMap key_map = KeyMap::Identity;
  // Test hook: when set, the delta-rule write rate is this constant instead
  // of sigmoid(beta_hat), and no gradient flows into the beta row of A.
  std::optional<double> beta_override;

  // Slow-net input width: d_in, or d_in + d_out for the recurrent hybrid.
  std::size_t slow_in() const;
  // Slow-net output width: d_in + d_out keys/values, +1 beta row for
  // delta/hybrid.
  std::size_t slow_out() const;
  bool is_fwp() const;
  bool has_beta() const;   // delta/hybrid emit a write-rate scalar
  bool has_h() const;      // elman/hybrid carry an activation state
  void validate() const;
};

struct CellParams {
  CellConfig cfg;
  Matrix W;  // d_out x d_in            (Feedforward, Elman)
  Matrix R;  // d_out x d_out           (Elman)
  Matrix A;  // slow_out() x slow_in()  (FWP kinds)
};

// Allocates zero parameters of the right shapes for the kind.
CellParams make_cell_params(const CellConfig& cfg);
// Uniform +-1/sqrt(fan_in) init, seeded.
CellParams init_cell_params(const CellConfig& cfg, std::uint64_t seed);

// Matrices actually present for the kind, in the canonical order W, R, A.
// The same order is used for serialization, finite differences and the
// optimizer.
std::vector<Matrix*> param_list(CellParams& p);
std::vector<const Matrix*> param_list(const CellParams& p);

struct CellGrads {
  Matrix dW;
  Matrix dR;
  Matrix dA;
};

CellGrads make_cell_grads(const CellConfig& cfg);
std::vector<Matrix*> grad_list(CellGrads& g);
std::vector<const Matrix*> grad_list(const CellGrads& g);

// Short-term memory carried across steps. Presence follows the kind:
// Feedforward has neither, Elman only h, Additive/Delta only w_fast, the
// hybrid both.
struct CellState {
  std::optional<Vector> h;       // d_out
  std::optional<Matrix> w_fast;  // d_out x d_in
};

// Zero state: h_0 = 0, W_0 = 0.
CellState make_cell_state(const CellConfig& cfg);

// Everything the exact step VJP needs, minus weight-matrix snapshots
// (those are the tape strategy's business). All fields are O(d).
struct StepRecord {
  CellKind kind = CellKind::Feedforward;
  Vector x;            // d_in
  Vector slow_in;      // slow-net input; [x, h_prev] for the hybrid, else == x
  Vector h_prev;       // elman/hybrid
  Vector z;            // pre-activation of y_t
  Vector y;            // sigma(z)
  Vector k_raw;        // fwp: key before the feature map
  Vector k_feat;       // fwp: phi(k_raw)
  Vector k_unit;       // delta/hybrid: k_feat / max(||k_feat||_2, floor)
  double key_norm = 0; // delta/hybrid: ||k_feat||_2 before flooring
  Vector v;            // fwp: value
  double beta_hat = 0; // delta/hybrid: pre-sigmoid write rate
  double beta = 0;     // delta/hybrid: effective write rate
  bool beta_forced = false;
  Vector retrieval_err;  // delta/hybrid: v - W_{t-1} k_unit
};

// --- forward ---------------------------------------------------------------

// Advances state in place and returns y_t; fills *rec when given.
Vector cell_step(const CellParams& p, CellState& state, const Vector& x, StepRecord* rec = nullptr);

// Per-kind entry points over explicit state.
Vector step_feedforward(const CellParams& p, const Vector& x);
std::pair<Vector, Vector> step_elman(const CellParams& p, const Vector& h_prev, const Vector& x);  // (h_t, y_t)
std::pair<Matrix, Vector> step_additive_fwp(const CellParams& p, const Matrix& w_prev, const Vector& x);
std::pair<Matrix, Vector> step_delta_fwp(const CellParams& p, const Matrix& w_prev, const Vector& x);
std::pair<CellState, Vector> step_hybrid_fwp(const CellParams& p, const CellState& state, const Vector& x);

// --- backward ---------------------------------------------------------------

// Cotangent of a cell state; empty members mean zero.
struct StateCotangent {
  Vector d_h;
  Matrix d_w;
};

// Exact reverse-mode gradient of one step.
//
// On entry d_state holds the cotangent of the outgoing state (from steps
// t+1..T); on exit it holds the cotangent of the incoming state. Parameter
// gradients accumulate additively into grads. w_prev/w_curr are the fast
// weights before/after the step; only the kinds that need them read them.
// d_x, when non-null, receives the input cotangent. d_v_capture, when
// non-null, receives the cotangent of the written value v_t.
void step_backward(const CellParams& p, const StepRecord& rec, const Matrix* w_prev, const Matrix* w_curr,
                   const Vector& d_y, StateCotangent& d_state, CellGrads& grads, Vector* d_x = nullptr,
                   Vector* d_v_capture = nullptr);

// Key feature map and its VJP.
Vector apply_key_map(KeyMap map, const Vector& k);
Vector key_map_vjp(KeyMap map, const Vector& k, const Vector& upstream);

// Reapplies the recorded write to w, bit-identically to the forward pass.
// Used by checkpoint replay.
void reapply_fast_write(const CellConfig& cfg, Matrix& w, const StepRecord& rec);

// --- checkpoint file --------------------------------------------------------

// Cell checkpoint: header (kind tag u32, activation tag u32, key map tag u32,
// d_in u64, d_out u64), then the present parameter matrices in canonical
// order, each in the binary matrix format.
void save_cell(const std::string& path, const CellParams& p);
CellParams load_cell(const std::string& path);
void write_cell(std::ostream& out, const CellParams& p);
CellParams read_cell(std::istream& in);

}  // namespace fw
