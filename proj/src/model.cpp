#include "poemlab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "poemlab/errors.hpp"

namespace poemlab {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Parameters

namespace {

template <typename Fn>
void for_each_tensor(Parameters& p, Fn&& fn) {
  for (auto& layer : p.encoder) {
    fn(layer.weight.flat(), true);
    fn(std::span<double>(layer.bias), false);
  }
  fn(p.head.weight.flat(), true);
  fn(std::span<double>(p.head.bias), false);
}

template <typename Fn>
void for_each_tensor(const Parameters& p, Fn&& fn) {
  for (const auto& layer : p.encoder) {
    fn(layer.weight.flat(), true);
    fn(std::span<const double>(layer.bias), false);
  }
  fn(p.head.weight.flat(), true);
  fn(std::span<const double>(p.head.bias), false);
}

DenseLayer zero_layer(std::size_t out, std::size_t in) {
  return DenseLayer{Matrix(out, in), Vec(out, 0.0)};
}

}  // namespace

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](std::span<const double> t, bool) { n += t.size(); });
  return n;
}

Vec Parameters::flatten() const {
  Vec out;
  out.reserve(count());
  for_each_tensor(*this, [&](std::span<const double> t, bool) {
    out.insert(out.end(), t.begin(), t.end());
  });
  return out;
}

void Parameters::assign(std::span<const double> flat) {
  if (flat.size() != count()) throw DimensionMismatch("Parameters::assign: wrong length");
  std::size_t pos = 0;
  for_each_tensor(*this, [&](std::span<double> t, bool) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), t.size(), t.begin());
    pos += t.size();
  });
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  for (const auto& layer : encoder) z.encoder.push_back(zero_layer(layer.out_dim(), layer.in_dim()));
  z.head = zero_layer(head.out_dim(), head.in_dim());
  return z;
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&](std::span<const double> t, bool) {
    for (double v : t) ok = ok && std::isfinite(v);
  });
  return ok;
}

std::vector<std::pair<std::size_t, std::size_t>> Parameters::shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& layer : encoder) {
    out.emplace_back(layer.out_dim(), layer.in_dim());
    out.emplace_back(layer.out_dim(), 1);
  }
  out.emplace_back(head.out_dim(), head.in_dim());
  out.emplace_back(head.out_dim(), 1);
  return out;
}

// ---------------------------------------------------------------------------
// Model

EnergyModel::EnergyModel(Parameters params, EnergyMargins margins)
    : params_(std::move(params)), margins_(margins) {
  std::size_t width = params_.encoder.empty() ? params_.head.in_dim() : params_.encoder[0].in_dim();
  for (const auto& layer : params_.encoder) {
    if (layer.in_dim() != width || layer.bias.size() != layer.out_dim())
      throw DimensionMismatch("EnergyModel: encoder layer shapes do not chain");
    width = layer.out_dim();
  }
  if (params_.head.in_dim() != width || params_.head.bias.size() != params_.head.out_dim())
    throw DimensionMismatch("EnergyModel: head shape does not match encoder output");
  if (params_.head.out_dim() < 1) throw DimensionMismatch("EnergyModel: no classes");
  if (!(margins_.beta >= 0.0)) throw ConfigError("beta", "must be non-negative");
}

EnergyModel EnergyModel::initialize(std::span<const std::size_t> widths, std::size_t num_classes,
                                    EnergyMargins margins, RngStream& rng) {
  if (widths.empty()) throw ConfigError("hidden", "at least the input width is required");
  if (num_classes < 2) throw ConfigError("num_classes", "must be at least 2");
  auto he_layer = [&](std::size_t out, std::size_t in) {
    DenseLayer layer = zero_layer(out, in);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& v : layer.weight.flat()) v = scale * rng.normal();
    return layer;
  };
  Parameters p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) p.encoder.push_back(he_layer(widths[i + 1], widths[i]));
  p.head = he_layer(num_classes, widths.back());
  return EnergyModel(std::move(p), margins);
}

std::size_t EnergyModel::input_dim() const {
  return params_.encoder.empty() ? params_.head.in_dim() : params_.encoder.front().in_dim();
}

namespace {

Vec affine(const DenseLayer& layer, std::span<const double> x) {
  Vec z = layer.weight * x;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
  return z;
}

// Pre-activations of every encoder layer plus the activations feeding each.
struct Trace {
  std::vector<Vec> inputs;  // inputs[l] feeds encoder layer l; inputs.back() = phi
  std::vector<Vec> pre;     // pre-activation of encoder layer l
  Vec logits;
};

Trace trace_forward(const Parameters& p, std::span<const double> x) {
  Trace t;
  t.inputs.emplace_back(x.begin(), x.end());
  for (const auto& layer : p.encoder) {
    Vec z = affine(layer, t.inputs.back());
    Vec a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
    t.pre.push_back(std::move(z));
    t.inputs.push_back(std::move(a));
  }
  t.logits = affine(p.head, t.inputs.back());
  return t;
}

Vec softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

// Accumulates the gradient for one sample given dL/dlogits.
void backprop(const Parameters& p, const Trace& t, std::span<const double> dlogits, Parameters& g) {
  const Vec& phi = t.inputs.back();
  for (std::size_t k = 0; k < dlogits.size(); ++k) {
    const double gk = dlogits[k];
    g.head.bias[k] += gk;
    auto row = g.head.weight.row(k);
    for (std::size_t j = 0; j < phi.size(); ++j) row[j] += gk * phi[j];
  }
  Vec upstream(phi.size(), 0.0);
  for (std::size_t k = 0; k < dlogits.size(); ++k) {
    auto row = p.head.weight.row(k);
    for (std::size_t j = 0; j < phi.size(); ++j) upstream[j] += dlogits[k] * row[j];
  }
  for (std::size_t l = p.encoder.size(); l-- > 0;) {
    const DenseLayer& layer = p.encoder[l];
    const Vec& z = t.pre[l];
    const Vec& in = t.inputs[l];
    Vec dz(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) dz[i] = z[i] > 0.0 ? upstream[i] : 0.0;
    DenseLayer& gl = g.encoder[l];
    Vec next(in.size(), 0.0);
    for (std::size_t i = 0; i < dz.size(); ++i) {
      if (dz[i] == 0.0) continue;
      gl.bias[i] += dz[i];
      auto grow = gl.weight.row(i);
      auto wrow = layer.weight.row(i);
      for (std::size_t j = 0; j < in.size(); ++j) {
        grow[j] += dz[i] * in[j];
        next[j] += dz[i] * wrow[j];
      }
    }
    upstream = std::move(next);
  }
}

void check_batch(const EnergyModel& model, const Batch& batch) {
  if (batch.id_inputs.rows() != batch.id_labels.size())
    throw LengthMismatch("Batch: id_inputs and id_labels differ in length");
  const std::size_t d = model.input_dim();
  if ((batch.id_inputs.rows() > 0 && batch.id_inputs.cols() != d) ||
      (batch.outlier_inputs.rows() > 0 && batch.outlier_inputs.cols() != d))
    throw DimensionMismatch("Batch: input width does not match model");
  for (int y : batch.id_labels)
    if (y < 0 || static_cast<std::size_t>(y) >= model.num_classes())
      throw FormatError("Batch: label out of range");
}

}  // namespace

EnergyModel::Output EnergyModel::forward(std::span<const double> x) const {
  if (x.size() != input_dim()) throw DimensionMismatch("forward: input width mismatch");
  Trace t = trace_forward(params_, x);
  return Output{std::move(t.inputs.back()), std::move(t.logits)};
}

Vec EnergyModel::bayes_features(std::span<const double> x) const {
  Vec phi = forward(x).phi;
  phi.push_back(1.0);
  return phi;
}

// ---------------------------------------------------------------------------
// Losses

double energy(std::span<const double> logits) {
  if (logits.empty()) throw DimensionMismatch("energy: empty logits");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double f : logits) s += std::exp(f - mx);
  return -(mx + std::log(s));
}

std::size_t argmax(std::span<const double> logits) {
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double reg_loss(std::span<const double> id_energies, std::span<const double> out_energies,
                double m_in, double m_out) {
  double id_term = 0.0;
  for (double e : id_energies) {
    const double h = std::max(0.0, e - m_in);
    id_term += h * h;
  }
  double out_term = 0.0;
  for (double e : out_energies) {
    const double h = std::max(0.0, m_out - e);
    out_term += h * h;
  }
  if (!id_energies.empty()) id_term /= static_cast<double>(id_energies.size());
  if (!out_energies.empty()) out_term /= static_cast<double>(out_energies.size());
  return id_term + out_term;
}

double total_loss(const EnergyModel& model, const Batch& batch) {
  check_batch(model, batch);
  const auto& mg = model.margins();
  Vec id_e, out_e;
  double ce = 0.0;
  for (std::size_t i = 0; i < batch.id_inputs.rows(); ++i) {
    const Vec logits = model.forward(batch.id_inputs.row(i)).logits;
    const double e = energy(logits);
    // -log softmax_c = logsumexp - f_c = -E - f_c.
    ce += -e - logits[static_cast<std::size_t>(batch.id_labels[i])];
    id_e.push_back(e);
  }
  for (std::size_t j = 0; j < batch.outlier_inputs.rows(); ++j)
    out_e.push_back(energy(model.forward(batch.outlier_inputs.row(j)).logits));
  if (!id_e.empty()) ce /= static_cast<double>(id_e.size());
  return ce + mg.beta * reg_loss(id_e, out_e, mg.m_in, mg.m_out);
}

Parameters loss_gradient(const EnergyModel& model, const Batch& batch) {
  check_batch(model, batch);
  const Parameters& p = model.params();
  const auto& mg = model.margins();
  Parameters g = p.zeros_like();
  const std::size_t n_in = batch.id_inputs.rows();
  const std::size_t n_out = batch.outlier_inputs.rows();

  for (std::size_t i = 0; i < n_in; ++i) {
    const Trace t = trace_forward(p, batch.id_inputs.row(i));
    const Vec prob = softmax(t.logits);
    const double e = energy(t.logits);
    const double hinge = std::max(0.0, e - mg.m_in);
    const double inv = 1.0 / static_cast<double>(n_in);
    Vec d(prob.size());
    // dE/dlogits = -softmax.
    for (std::size_t k = 0; k < prob.size(); ++k) {
      const double onehot = static_cast<int>(k) == batch.id_labels[i] ? 1.0 : 0.0;
      d[k] = inv * (prob[k] - onehot) + mg.beta * inv * 2.0 * hinge * (-prob[k]);
    }
    backprop(p, t, d, g);
  }
  for (std::size_t j = 0; j < n_out; ++j) {
    const Trace t = trace_forward(p, batch.outlier_inputs.row(j));
    const double e = energy(t.logits);
    const double hinge = std::max(0.0, mg.m_out - e);
    if (hinge == 0.0 || mg.beta == 0.0) continue;
    const Vec prob = softmax(t.logits);
    const double inv = 1.0 / static_cast<double>(n_out);
    Vec d(prob.size());
    for (std::size_t k = 0; k < prob.size(); ++k) d[k] = mg.beta * inv * (-2.0 * hinge) * (-prob[k]);
    backprop(p, t, d, g);
  }
  return g;
}

Matrix input_jacobian(const EnergyModel& model, std::span<const double> x) {
  const Parameters& p = model.params();
  const Trace t = trace_forward(p, x);
  // Forward-mode: J = W_head * D_L W_L ... D_1 W_1.
  Matrix j = Matrix::identity(x.size());
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    j = p.encoder[l].weight * j;
    for (std::size_t r = 0; r < j.rows(); ++r)
      if (!(t.pre[l][r] > 0.0))
        for (double& v : j.row(r)) v = 0.0;
  }
  return p.head.weight * j;
}

OptimState OptimState::for_model(const EnergyModel& model, double learning_rate, double momentum,
                                 double weight_decay) {
  OptimState s;
  s.velocity = model.params().zeros_like();
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  return s;
}

double backward_and_step(EnergyModel& model, OptimState& optim, const Batch& batch) {
  const double loss = total_loss(model, batch);
  Parameters g = loss_gradient(model, batch);
  if (!g.all_finite() || !std::isfinite(loss))
    throw NonFiniteGradient("backward_and_step: non-finite gradient or loss");
  if (optim.velocity.count() != g.count()) optim.velocity = model.params().zeros_like();

  std::vector<std::span<double>> params, grads, vels;
  std::vector<bool> decays;
  for_each_tensor(model.params(), [&](std::span<double> t, bool is_weight) {
    params.push_back(t);
    decays.push_back(is_weight);
  });
  for_each_tensor(g, [&](std::span<double> t, bool) { grads.push_back(t); });
  for_each_tensor(optim.velocity, [&](std::span<double> t, bool) { vels.push_back(t); });

  const double mu = optim.momentum;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double wd = decays[k] ? optim.weight_decay : 0.0;
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double grad = grads[k][i] + wd * params[k][i];
      double& v = vels[k][i];
      v = mu * v + grad;
      const double step = optim.nesterov ? grad + mu * v : v;
      params[k][i] -= optim.learning_rate * step;
    }
  }
  return loss;
}

double ood_score(const EnergyModel& model, std::span<const double> x) {
  return -energy(model.forward(x).logits);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'P', 'O', 'E', 'M', 'C', 'K', 'P', 'T'};

void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw FormatError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const EnergyModel& model,
                     const std::string& extra_json) {
  json header;
  header["schema_version"] = 1;
  header["format"] = "poemlab-checkpoint";
  std::vector<std::size_t> widths{model.input_dim()};
  for (const auto& layer : model.params().encoder) widths.push_back(layer.out_dim());
  header["widths"] = widths;
  header["num_classes"] = model.num_classes();
  header["margins"] = {{"m_in", model.margins().m_in},
                       {"m_out", model.margins().m_out},
                       {"beta", model.margins().beta}};
  json shapes = json::array();
  for (auto [r, c] : model.params().shapes()) shapes.push_back({r, c});
  header["shapes"] = shapes;
  header["param_count"] = model.params().count();
  header["dtype"] = "float64-le";
  header["extra"] = json::parse(extra_json);
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("checkpoint: cannot open " + path.string() + " for writing");
  os.write(kMagic, 8);
  write_u64_le(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : model.params().flatten()) write_u64_le(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw FormatError("checkpoint: write failed for " + path.string());
}

EnergyModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("checkpoint: bad magic");
  const std::uint64_t len = read_u64_le(is);
  if (len > (1u << 26)) throw FormatError("checkpoint: header too large");
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw FormatError("checkpoint: truncated header");
  const json header = json::parse(text);

  const auto widths = header.at("widths").get<std::vector<std::size_t>>();
  const auto k = header.at("num_classes").get<std::size_t>();
  EnergyMargins margins{header.at("margins").at("m_in").get<double>(),
                        header.at("margins").at("m_out").get<double>(),
                        header.at("margins").at("beta").get<double>()};
  Parameters p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    p.encoder.push_back(DenseLayer{Matrix(widths[i + 1], widths[i]), Vec(widths[i + 1], 0.0)});
  p.head = DenseLayer{Matrix(k, widths.back()), Vec(k, 0.0)};
  if (p.count() != header.at("param_count").get<std::size_t>())
    throw FormatError("checkpoint: param_count does not match shapes");
  Vec flat(p.count());
  for (double& v : flat) v = std::bit_cast<double>(read_u64_le(is));
  p.assign(flat);
  return EnergyModel(std::move(p), margins);
}

}  // namespace poemlab
