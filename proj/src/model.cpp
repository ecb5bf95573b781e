#include "model.hpp"

#include <algorithm>
#include <cmath>

#include "stats.hpp"

namespace mssfs {

namespace {

void check_psd(const Mat& m, const std::string& what) {
  if (m.rows() != m.cols())
    throw ConfigError(what + " is not square");
  if (m.size() == 0) return;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw ConfigError(what + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw ConfigError(what + " is not positive semidefinite");
}

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw DomainError(what + " is not finite");
}

}  // namespace

void ModelSpec::validate() const {
  if (p < 1 || q < 1) throw ConfigError("dimensions must be positive");

  auto check_dims = [&](const Mat& m, int rows, int cols,
                        const std::string& what) {
    if (m.rows() != rows || m.cols() != cols)
      throw ConfigError(what + " has wrong dimensions");
  };

  const int horizon = n_max > 0 ? n_max : 1;
  for (int t = 1; t <= horizon; ++t) {
    check_dims(F.at(t), p, q, "F");
    check_dims(V.at(t), p, p, "V");
    check_psd(V.at(t), "V");
    for (int k = 0; k < 2; ++k) {
      check_dims(G[k].at(t), q, q, "G");
      if (gamma[k].at(t).size() != q) throw ConfigError("gamma has wrong size");
      check_dims(W[k].at(t), q, q, "W");
      check_psd(W[k].at(t), "W");
    }
    if (F.is_constant() && V.is_constant() && G[0].is_constant() &&
        G[1].is_constant() && gamma[0].is_constant() &&
        gamma[1].is_constant() && W[0].is_constant() && W[1].is_constant())
      break;
  }

  for (int k = 0; k < 2; ++k) {
    if (init.mean[k].size() != q)
      throw ConfigError("initial mean has wrong size");
    check_dims(init.cov[k], q, q, "initial covariance");
    check_psd(init.cov[k], "initial covariance");
    if (sw.beta[k].size() != sw.d)
      throw ConfigError("switch beta has wrong size");
  }
  if (!(init.prob0 >= 0.0 && init.prob0 <= 1.0))
    throw ConfigError("initial regime probability outside [0, 1]");
  if (sw.feedback.L < 1) throw ConfigError("feedback lag depth must be >= 1");
}

TransitionProbs transition_probabilities(const SwitchSpec& sw, const Vec& x,
                                         double z0, double z1) {
  check_finite(z0, "feedback z0");
  check_finite(z1, "feedback z1");
  if (x.size() != sw.d) throw DomainError("covariate vector has wrong size");
  for (int j = 0; j < x.size(); ++j) check_finite(x[j], "covariate");

  const double eta0 = sw.alpha[0] + (sw.d > 0 ? sw.beta[0].dot(x) : 0.0) + z0;
  const double eta1 = sw.alpha[1] + (sw.d > 0 ? sw.beta[1].dot(x) : 0.0) + z1;
  check_finite(eta0, "switch linear predictor");
  check_finite(eta1, "switch linear predictor");

  TransitionProbs tp{};
  tp.p01 = logistic(eta0);
  tp.p00 = 1.0 - tp.p01;
  tp.p11 = logistic(eta1);
  tp.p10 = 1.0 - tp.p11;
  return tp;
}

double feedback_average(const FeedbackSpec& spec,
                        std::span<const double> history, int t) {
  if (t <= 1) return 0.0;
  const int L = spec.L;
  // Window covers theta_{t-L} .. theta_{t-1}; lag l (1-based, oldest first)
  // addresses theta_{t-L+l-1}, which exists iff l >= L - t + 2.
  const int l_min = std::max(1, L - t + 2);
  double wsum = 0.0;
  double acc = 0.0;
  for (int l = l_min; l <= L; ++l) {
    const int idx = t - L + l - 1;  // 1-based time of the lagged state
    if (idx < 1 || idx > static_cast<int>(history.size()))
      throw DomainError("feedback history too short for t=" +
                        std::to_string(t));
    const double w = std::exp(spec.rho * static_cast<double>(L - l + 1));
    acc += w * history[static_cast<size_t>(idx - 1)];
    wsum += w;
  }
  if (spec.normalize) acc /= wsum;
  check_finite(acc, "feedback value");
  return acc;
}

double feedback_value(const FeedbackSpec& spec, double zeta,
                      std::span<const double> history, int t) {
  if (zeta == 0.0) return 0.0;
  return zeta * feedback_average(spec, history, t);
}

void ParameterSet::add(const std::string& name, double value,
                       TransformKind transform, bool fixed, bool penalized) {
  if (index_.count(name))
    throw ConfigError("duplicate parameter name: " + name);
  index_[name] = entries_.size();
  entries_.push_back(ParamEntry{name, value, transform, fixed, penalized});
}

bool ParameterSet::has(const std::string& name) const {
  return index_.count(name) != 0;
}

double ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  return entries_[it->second].value;
}

void ParameterSet::set(const std::string& name, double value) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  entries_[it->second].value = value;
}

void ParameterSet::set_fixed(const std::string& name, bool fixed) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
  entries_[it->second].fixed = fixed;
}

std::size_t ParameterSet::free_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (!e.fixed) ++n;
  return n;
}

std::vector<std::string> ParameterSet::free_names() const {
  std::vector<std::string> names;
  for (const auto& e : entries_)
    if (!e.fixed) names.push_back(e.name);
  return names;
}

double transform_value(double value, TransformKind kind,
                       TransformDirection direction) {
  check_finite(value, "parameter value");
  switch (kind) {
    case TransformKind::Identity:
      return value;
    case TransformKind::Log:
      if (direction == TransformDirection::ToUnconstrained) {
        if (!(value > 0.0))
          throw DomainError("log transform requires a positive value, got " +
                            std::to_string(value));
        return std::log(value);
      }
      return std::exp(value);
    case TransformKind::Logit:
      if (direction == TransformDirection::ToUnconstrained) {
        if (!(value > 0.0 && value < 1.0))
          throw DomainError("logit transform requires a value in (0,1), got " +
                            std::to_string(value));
        return logit(value);
      }
      return logistic(value);
  }
  throw DomainError("unknown transform");
}

std::vector<double> ParameterSet::free_unconstrained() const {
  std::vector<double> u;
  u.reserve(free_count());
  for (const auto& e : entries_) {
    if (e.fixed) continue;
    u.push_back(
        transform_value(e.value, e.transform,
                        TransformDirection::ToUnconstrained));
  }
  return u;
}

void ParameterSet::set_free_unconstrained(std::span<const double> u) {
  if (u.size() != free_count())
    throw ConfigError("unconstrained vector has wrong length");
  std::size_t i = 0;
  for (auto& e : entries_) {
    if (e.fixed) continue;
    e.value = transform_value(u[i++], e.transform,
                              TransformDirection::ToConstrained);
  }
}

double ParameterSet::penalized_sq_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) {
    if (!e.penalized || e.fixed) continue;
    const double u = transform_value(e.value, e.transform,
                                     TransformDirection::ToUnconstrained);
    s += u * u;
  }
  return s;
}

ParameterSet apply_transform(const ParameterSet& params,
                             TransformDirection direction) {
  ParameterSet out = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = params.entry(i);
    out.set(e.name, transform_value(e.value, e.transform, direction));
  }
  return out;
}

ParameterSet temperature_parameters(int d) {
  ParameterSet p;
  p.add("sigma_v2", 1.0, TransformKind::Log);
  p.add("sigma_0_2", 1.0, TransformKind::Log);
  p.add("sigma_1_2", 1.0, TransformKind::Log);
  p.add("delta", 1.0, TransformKind::Log);
  p.add("G_0", 0.5, TransformKind::Logit);
  p.add("G_1", 0.5, TransformKind::Logit);
  p.add("alpha_0", 0.0);
  for (int j = 1; j <= d; ++j)
    p.add("beta_0_" + std::to_string(j), 0.0);
  p.add("alpha_1", 0.0, TransformKind::Identity, false, true);
  for (int j = 1; j <= d; ++j)
    p.add("beta_1_" + std::to_string(j), 0.0, TransformKind::Identity, false,
          true);
  p.add("zeta_1", 0.0, TransformKind::Identity, false, true);
  return p;
}

ModelSpec temperature_preset(const ParameterSet& params,
                             const FeedbackSpec& feedback) {
  static const char* required[] = {"sigma_v2", "sigma_0_2", "sigma_1_2",
                                   "delta",    "G_0",       "G_1",
                                   "alpha_0",  "alpha_1",   "zeta_1"};
  for (const char* name : required)
    if (!params.has(name))
      throw ConfigError(std::string("temperature preset missing parameter ") +
                        name);

  const double sigma_v2 = params.get("sigma_v2");
  const double sigma_0_2 = params.get("sigma_0_2");
  const double sigma_1_2 = params.get("sigma_1_2");
  const double delta = params.get("delta");
  const double g0 = params.get("G_0");
  const double g1 = params.get("G_1");

  if (!(sigma_v2 > 0.0 && sigma_0_2 >= 0.0 && sigma_1_2 >= 0.0))
    throw ConfigError("temperature preset requires positive variances");
  // delta = 0 collapses the two regimes onto one process; the log transform
  // (not the preset) enforces strict positivity during estimation.
  if (!(delta >= 0.0))
    throw ConfigError("temperature preset requires delta >= 0");
  if (!(g0 >= 0.0 && g0 < 1.0 && g1 >= 0.0 && g1 < 1.0))
    throw ConfigError("temperature preset requires G_k in [0, 1)");

  int d = 0;
  while (params.has("beta_0_" + std::to_string(d + 1))) ++d;

  ModelSpec m;
  m.p = 1;
  m.q = 1;
  m.F = Schedule<Mat>(Mat::Ones(1, 1));
  m.V = Schedule<Mat>(Mat::Constant(1, 1, sigma_v2));
  m.G[0] = Schedule<Mat>(Mat::Constant(1, 1, g0));
  m.G[1] = Schedule<Mat>(Mat::Constant(1, 1, g1));
  m.gamma[0] = Schedule<Vec>(Vec::Zero(1));
  // gamma_1 = -delta * r_1 with r_1 = G_1 - 1, so the elevated regime
  // reverts to level delta.
  m.gamma[1] = Schedule<Vec>(Vec::Constant(1, delta * (1.0 - g1)));
  m.W[0] = Schedule<Mat>(Mat::Constant(1, 1, sigma_0_2));
  m.W[1] = Schedule<Mat>(Mat::Constant(1, 1, sigma_1_2));

  m.sw.d = d;
  m.sw.alpha = {params.get("alpha_0"), params.get("alpha_1")};
  m.sw.beta[0] = Vec::Zero(d);
  m.sw.beta[1] = Vec::Zero(d);
  for (int j = 1; j <= d; ++j) {
    m.sw.beta[0][j - 1] = params.get("beta_0_" + std::to_string(j));
    m.sw.beta[1][j - 1] = params.get("beta_1_" + std::to_string(j));
  }
  m.sw.zeta = {0.0, params.get("zeta_1")};
  m.sw.feedback = feedback;

  m.init.mean[0] = Vec::Zero(1);
  m.init.mean[1] = Vec::Constant(1, delta);
  m.init.cov[0] = Mat::Zero(1, 1);
  m.init.cov[1] = Mat::Zero(1, 1);
  m.init.prob0 = 1.0;

  m.validate();
  return m;
}

ModelBuilder temperature_builder(const FeedbackSpec& feedback) {
  return [feedback](const ParameterSet& params) {
    return temperature_preset(params, feedback);
  };
}

}  // namespace mssfs
