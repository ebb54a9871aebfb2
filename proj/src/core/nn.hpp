#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace mmsfm {

inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;

/// Fully connected network taking (x, t) with t appended as the last input
/// feature. SELU on hidden layers, linear output. Parameters live in one
/// flat buffer: per layer the (out x in) row-major weights, then the bias.
class Mlp {
 public:
  /// Forward-pass record for one batch, needed by backward().
  struct Tape {
    std::vector<Matrix> inputs;          // input to each layer
    std::vector<Matrix> preactivations;  // affine output of each layer
  };

  Mlp() = default;
  /// All parameters zero. widths = (d + 1, hidden..., d).
  explicit Mlp(std::vector<std::size_t> widths);

  /// LeCun-normal weights (std 1/sqrt(fan_in)) and zero biases.
  static Mlp lecun_normal(std::vector<std::size_t> widths, Rng& rng);

  /// (d + 1, 64, 64, d) by default.
  static std::vector<std::size_t> default_widths(std::size_t dim,
                                                 std::vector<std::size_t> hidden = {64, 64});

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t layers() const noexcept { return widths_.size() - 1; }
  std::size_t input_dim() const noexcept { return widths_.front(); }
  std::size_t data_dim() const noexcept { return widths_.front() - 1; }
  std::size_t output_dim() const noexcept { return widths_.back(); }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> weights(std::size_t layer);
  std::span<double> bias(std::size_t layer);

  std::vector<double> forward(std::span<const double> x, double t) const;
  void forward(std::span<const double> x, double t, std::span<double> out) const;
  /// Row n of the result is forward(x.row(n), t[n]).
  Matrix forward(const Matrix& x, std::span<const double> t) const;
  Matrix forward(const Matrix& x, std::span<const double> t, Tape& tape) const;

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) for
  /// every row of the recorded batch.
  void backward(const Tape& tape, const Matrix& output_grad, std::span<double> grad) const;

  bool operator==(const Mlp&) const = default;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  void check_input(const Matrix& x, std::span<const double> t) const;

  std::vector<std::size_t> widths_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;

  bool operator==(const AdamWConfig&) const = default;
};

/// Adam with decoupled weight decay and bias correction.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t parameters, AdamWConfig config);

  void step(std::span<double> params, std::span<const double> grads);

  const AdamWConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return step_; }
  const std::vector<double>& first_moment() const noexcept { return m_; }
  const std::vector<double>& second_moment() const noexcept { return v_; }

  static AdamW restore(AdamWConfig config, std::uint64_t step, std::vector<double> m,
                       std::vector<double> v);

  bool operator==(const AdamW&) const = default;

 private:
  AdamWConfig config_{};
  std::uint64_t step_ = 0;
  std::vector<double> m_, v_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Mlp net;
  std::optional<AdamW> optimizer;
};

/// Binary checkpoint: "MMSFMNET", u32 version, u32 flags, u64 width count,
/// u64 widths, u64 parameter count, f64 parameters, then the optimizer state
/// when flag bit 0 is set. All integers and floats little-endian.
void save_checkpoint(const std::string& path, const Mlp& net, const AdamW* optimizer = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mmsfm
