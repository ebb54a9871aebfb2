#include "nn.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace mmsfm {

namespace {

double selu(double x) { return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x); }

double selu_grad(double x) { return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x); }

constexpr char kMagic[8] = {'M', 'M', 'S', 'F', 'M', 'N', 'E', 'T'};

void put_u64(std::string& buf, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
void put_u32(std::string& buf, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint64_t u64() { return read(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) {
    if (data_.size() - pos_ < n) fail(Errc::parse_error, "truncated checkpoint " + path_);
  }
  std::uint64_t read(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < n; ++k) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    }
    pos_ += n;
    return v;
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  require(widths_.size() >= 2, "Mlp needs at least an input and an output width");
  require(widths_.front() >= 2, "Mlp input width must be data dimension + 1");
  for (std::size_t w : widths_) require(w >= 1, "Mlp widths must be positive");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::lecun_normal(std::vector<std::size_t> widths, Rng& rng) {
  Mlp net(std::move(widths));
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(net.widths_[l]));
    for (double& w : net.weights(l)) w = stddev * standard_normal(rng);
  }
  return net;
}

std::vector<std::size_t> Mlp::default_widths(std::size_t dim, std::vector<std::size_t> hidden) {
  std::vector<std::size_t> widths{dim + 1};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(dim);
  return widths;
}

std::span<double> Mlp::weights(std::size_t layer) {
  return {params_.data() + weight_offset(layer), widths_[layer] * widths_[layer + 1]};
}

std::span<double> Mlp::bias(std::size_t layer) {
  return {params_.data() + weight_offset(layer) + widths_[layer] * widths_[layer + 1],
          widths_[layer + 1]};
}

void Mlp::check_input(const Matrix& x, std::span<const double> t) const {
  require(x.cols() == data_dim(), "Mlp: input dimension " + std::to_string(x.cols()) +
                                      " does not match network dimension " +
                                      std::to_string(data_dim()));
  require(t.size() == x.rows(), "Mlp: one time value per input row is required");
  for (double v : x.data()) require(std::isfinite(v), "Mlp: non-finite input");
  for (double v : t) require(std::isfinite(v), "Mlp: non-finite time");
}

Matrix Mlp::forward(const Matrix& x, std::span<const double> t, Tape& tape) const {
  check_input(x, t);
  const std::size_t batch = x.rows();
  tape.inputs.assign(layers(), Matrix());
  tape.preactivations.assign(layers(), Matrix());

  Matrix input(batch, input_dim());
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy(x.row(n).begin(), x.row(n).end(), input.row(n).begin());
    input(n, data_dim()) = t[n];
  }

  for (std::size_t l = 0; l < layers(); ++l) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* b = w + in * out;
    Matrix pre(batch, out);
    for (std::size_t n = 0; n < batch; ++n) {
      const double* xin = input.row(n).data();
      double* y = pre.row(n).data();
      for (std::size_t o = 0; o < out; ++o) {
        const double* wo = w + o * in;
        double s = b[o];
        for (std::size_t i = 0; i < in; ++i) s += wo[i] * xin[i];
        y[o] = s;
      }
    }
    Matrix next = pre;
    if (l + 1 < layers()) {
      for (double& v : next.data()) v = selu(v);
    }
    tape.inputs[l] = std::move(input);
    tape.preactivations[l] = std::move(pre);
    input = std::move(next);
  }
  return input;
}

Matrix Mlp::forward(const Matrix& x, std::span<const double> t) const {
  Tape tape;
  return forward(x, t, tape);
}

void Mlp::forward(std::span<const double> x, double t, std::span<double> out) const {
  require(out.size() == output_dim(), "Mlp: output buffer has wrong size");
  const Matrix row = Matrix::from_rows(1, x.size(), {x.begin(), x.end()});
  const double times[1] = {t};
  const Matrix y = forward(row, times);
  std::copy(y.data().begin(), y.data().end(), out.begin());
}

std::vector<double> Mlp::forward(std::span<const double> x, double t) const {
  std::vector<double> out(output_dim());
  forward(x, t, out);
  return out;
}

void Mlp::backward(const Tape& tape, const Matrix& output_grad, std::span<double> grad) const {
  require(grad.size() == params_.size(), "Mlp::backward: gradient buffer has wrong size");
  require(tape.inputs.size() == layers(), "Mlp::backward: tape does not match network");
  const std::size_t batch = tape.inputs.front().rows();
  require(output_grad.rows() == batch && output_grad.cols() == output_dim(),
          "Mlp::backward: output gradient has wrong shape");

  Matrix delta = output_grad;  // d loss / d (layer output)
  for (std::size_t l = layers(); l-- > 0;) {
    const std::size_t in = widths_[l];
    const std::size_t out = widths_[l + 1];
    const Matrix& pre = tape.preactivations[l];
    const Matrix& input = tape.inputs[l];
    if (l + 1 < layers()) {
      for (std::size_t k = 0; k < delta.data().size(); ++k) {
        delta.data()[k] *= selu_grad(pre.data()[k]);
      }
    }
    double* gw = grad.data() + weight_offset(l);
    double* gb = gw + in * out;
    const double* w = params_.data() + weight_offset(l);
    Matrix previous(batch, in);
    for (std::size_t n = 0; n < batch; ++n) {
      const double* dn = delta.row(n).data();
      const double* xin = input.row(n).data();
      double* pn = previous.row(n).data();
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dn[o];
        gb[o] += d;
        double* gwo = gw + o * in;
        const double* wo = w + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          gwo[i] += d * xin[i];
          pn[i] += d * wo[i];
        }
      }
    }
    delta = std::move(previous);
  }
}

AdamW::AdamW(std::size_t parameters, AdamWConfig config)
    : config_(config), m_(parameters, 0.0), v_(parameters, 0.0) {}

AdamW AdamW::restore(AdamWConfig config, std::uint64_t step, std::vector<double> m,
                     std::vector<double> v) {
  require(m.size() == v.size(), "AdamW moment buffers must have equal size");
  AdamW opt;
  opt.config_ = config;
  opt.step_ = step;
  opt.m_ = std::move(m);
  opt.v_ = std::move(v);
  return opt;
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  require(params.size() == m_.size() && grads.size() == m_.size(),
          "AdamW: parameter/gradient size mismatch");
  ++step_;
  const auto& c = config_;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(step_));
  const double decay = 1.0 - c.lr * c.weight_decay;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    m_[k] = c.beta1 * m_[k] + (1.0 - c.beta1) * g;
    v_[k] = c.beta2 * v_[k] + (1.0 - c.beta2) * g * g;
    const double m_hat = m_[k] / bias1;
    const double v_hat = v_[k] / bias2;
    params[k] = params[k] * decay - c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

void save_checkpoint(const std::string& path, const Mlp& net, const AdamW* optimizer) {
  std::string buf(kMagic, sizeof(kMagic));
  put_u32(buf, kCheckpointVersion);
  put_u32(buf, optimizer ? 1u : 0u);
  put_u64(buf, net.widths().size());
  for (std::size_t w : net.widths()) put_u64(buf, w);
  put_u64(buf, net.parameter_count());
  for (double p : net.parameters()) put_f64(buf, p);
  if (optimizer) {
    const auto& c = optimizer->config();
    put_u64(buf, optimizer->steps());
    for (double v : {c.lr, c.beta1, c.beta2, c.eps, c.weight_decay}) put_f64(buf, v);
    for (double v : optimizer->first_moment()) put_f64(buf, v);
    for (double v : optimizer->second_moment()) put_f64(buf, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(Errc::io_error, "failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data), path);

  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    fail(Errc::parse_error, "not a network checkpoint: " + path);
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(Errc::checkpoint_mismatch, "checkpoint " + path + " has version " +
                                        std::to_string(version) + ", expected " +
                                        std::to_string(kCheckpointVersion));
  }
  const std::uint32_t flags = r.u32();
  const std::uint64_t n_widths = r.u64();
  if (n_widths < 2 || n_widths > 64) fail(Errc::parse_error, "bad layer count in " + path);
  std::vector<std::size_t> widths(n_widths);
  for (auto& w : widths) {
    w = r.u64();
    if (w == 0 || w > (1u << 20)) fail(Errc::parse_error, "bad layer width in " + path);
  }
  Checkpoint ck{Mlp(widths), std::nullopt};
  if (r.u64() != ck.net.parameter_count()) {
    fail(Errc::parse_error, "parameter count does not match widths in " + path);
  }
  for (double& p : ck.net.parameters()) p = r.f64();
  if (flags & 1u) {
    const std::uint64_t step = r.u64();
    AdamWConfig c;
    c.lr = r.f64();
    c.beta1 = r.f64();
    c.beta2 = r.f64();
    c.eps = r.f64();
    c.weight_decay = r.f64();
    std::vector<double> m(ck.net.parameter_count()), v(ck.net.parameter_count());
    for (double& x : m) x = r.f64();
    for (double& x : v) x = r.f64();
    ck.optimizer = AdamW::restore(c, step, std::move(m), std::move(v));
  }
  if (!r.at_end()) fail(Errc::parse_error, "trailing bytes in checkpoint " + path);
  return ck;
}

}  // namespace mmsfm
