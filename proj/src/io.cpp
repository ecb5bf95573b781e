#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mssfs {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == sep) {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  if (t.empty()) throw ParseError(context + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size())
    throw ParseError(context + ": not a number: '" + t + "'");
  return v;
}

long parse_long(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  long value = 0;
  const auto [ptr, ec] =
      std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError(context + ": not an integer: '" + t + "'");
  return value;
}

bool parse_bool(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError(context + ": not a boolean: '" + t + "'");
}

Mat parse_matrix(const std::string& s, const std::string& context) {
  std::vector<std::vector<double>> rows;
  for (const std::string& row_text : split(s, ';')) {
    std::vector<double> row;
    std::istringstream is(row_text);
    std::string tok;
    while (is >> tok) {
      if (!tok.empty() && tok.back() == ',') tok.pop_back();
      if (tok.empty()) continue;
      row.push_back(parse_double(tok, context));
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(context + ": empty matrix literal");
  Mat m(static_cast<Eigen::Index>(rows.size()),
        static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw ParseError(context + ": ragged matrix literal");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  }
  return m;
}

std::string format_matrix(const Mat& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += " ";
      out += format_double(m(i, j));
    }
  }
  return out;
}

bool is_observation_column(const std::string& name) {
  if (name.empty() || name[0] != 'y') return false;
  return std::all_of(name.begin() + 1, name.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset parse_dataset(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split(line, ',');
  std::size_t col = 0;
  auto expect = [&](const std::string& name) {
    if (col >= header.size() || trim(header[col]) != name)
      throw ParseError(origin + ": expected column '" + name +
                       "' at position " + std::to_string(col + 1));
    ++col;
  };
  expect("subject_id");
  const bool has_arm = col < header.size() && trim(header[col]) == "arm";
  if (has_arm) ++col;
  expect("time");

  std::size_t y_begin = col;
  while (col < header.size() && is_observation_column(trim(header[col]))) ++col;
  const int p = static_cast<int>(col - y_begin);
  if (p == 0)
    throw ParseError(origin + ": no observation (y) columns in header");

  std::vector<std::string> covariate_names;
  for (; col < header.size(); ++col)
    covariate_names.push_back(trim(header[col]));
  const int d = static_cast<int>(covariate_names.size());
  const std::size_t ncols = header.size();

  struct Row {
    long time;
    Vec y;
    Vec x;
    int line_no;
  };
  std::vector<std::string> order;  // series keys in first-appearance order
  std::map<std::string, std::vector<Row>> rows;
  std::map<std::string, std::pair<std::string, std::string>> key_parts;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    const std::string where = origin + " row " + std::to_string(line_no);
    if (fields.size() != ncols)
      throw ParseError(where + ": expected " + std::to_string(ncols) +
                       " fields, got " + std::to_string(fields.size()));

    std::size_t f = 0;
    const std::string subject = trim(fields[f++]);
    if (subject.empty()) throw ParseError(where + ": empty subject_id");
    const std::string arm = has_arm ? trim(fields[f++]) : "";
    Row row;
    row.line_no = line_no;
    row.time = parse_long(fields[f++], where + " (time)");
    row.y = Vec(p);
    for (int j = 0; j < p; ++j) {
      const std::string& field = fields[f++];
      if (trim(field).empty())
        row.y[j] = std::numeric_limits<double>::quiet_NaN();
      else
        row.y[j] = parse_double(field, where + " (y)");
    }
    row.x = Vec(d);
    for (int j = 0; j < d; ++j) {
      if (trim(fields[f]).empty())
        throw ParseError(where + ": missing covariate '" +
                         covariate_names[static_cast<size_t>(j)] +
                         "' (covariates must be complete)");
      row.x[j] = parse_double(fields[f++], where + " (covariate)");
    }

    const std::string key = subject + "\x1f" + arm;
    if (!rows.count(key)) {
      order.push_back(key);
      key_parts[key] = {subject, arm};
    }
    rows[key].push_back(std::move(row));
  }
  if (order.empty()) throw ParseError(origin + ": no data rows");

  Dataset out;
  out.covariate_names = covariate_names;
  out.source_path = origin;
  for (const std::string& key : order) {
    auto& series_rows = rows[key];
    std::sort(series_rows.begin(), series_rows.end(),
              [](const Row& a, const Row& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < series_rows.size(); ++i) {
      if (series_rows[i].time == series_rows[i - 1].time)
        throw ParseError(origin + " row " +
                         std::to_string(series_rows[i].line_no) +
                         ": duplicate (subject, time) entry for subject '" +
                         key_parts[key].first + "' t=" +
                         std::to_string(series_rows[i].time));
      if ((series_rows[i].x - series_rows[0].x).cwiseAbs().maxCoeff() > 0.0)
        throw ParseError(origin + " row " +
                         std::to_string(series_rows[i].line_no) +
                         ": covariates vary within a series");
    }

    SubjectSeries s;
    s.subject = key_parts[key].first;
    s.arm = key_parts[key].second;
    s.x = series_rows[0].x;
    const long t0 = series_rows[0].time;
    const long t1 = series_rows.back().time;
    s.t_start = static_cast<int>(t0);
    s.y.assign(static_cast<size_t>(t1 - t0 + 1),
               Vec::Constant(p, std::numeric_limits<double>::quiet_NaN()));
    for (const Row& r : series_rows)
      s.y[static_cast<size_t>(r.time - t0)] = r.y;
    out.subjects.push_back(std::move(s));
  }
  return out;
}

Dataset load_dataset(const std::string& path) {
  Dataset d = parse_dataset(read_text_file(path), path);
  d.source_path = path;
  return d;
}

std::string format_dataset(const Dataset& data) {
  const int p = data.subjects.empty()
                    ? 1
                    : static_cast<int>(data.subjects[0].y.empty()
                                           ? 1
                                           : data.subjects[0].y[0].size());
  const bool has_arm = std::any_of(
      data.subjects.begin(), data.subjects.end(),
      [](const SubjectSeries& s) { return !s.arm.empty(); });

  std::string out = "subject_id";
  if (has_arm) out += ",arm";
  out += ",time";
  if (p == 1) {
    out += ",y1";
  } else {
    for (int j = 1; j <= p; ++j) out += ",y" + std::to_string(j);
  }
  for (const auto& name : data.covariate_names) out += "," + name;
  out += "\n";

  for (const auto& s : data.subjects) {
    for (int i = 0; i < s.length(); ++i) {
      out += s.subject;
      if (has_arm) out += "," + s.arm;
      out += "," + std::to_string(s.t_start + i);
      for (int j = 0; j < p; ++j) {
        out += ",";
        const double v = s.y[static_cast<size_t>(i)][j];
        if (std::isfinite(v)) out += format_double(v);
      }
      for (int j = 0; j < s.x.size(); ++j) out += "," + format_double(s.x[j]);
      out += "\n";
    }
  }
  return out;
}

void save_dataset(const Dataset& data, const std::string& path) {
  write_text_file(path, format_dataset(data));
}

std::vector<std::string> Dataset::subject_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : subjects)
    if (std::find(ids.begin(), ids.end(), s.subject) == ids.end())
      ids.push_back(s.subject);
  return ids;
}

RunConfig default_config() { return RunConfig{}; }

namespace {

using Section = std::map<std::string, std::string>;
using IniDoc = std::map<std::string, Section>;

IniDoc parse_ini(const std::string& text, const std::string& origin) {
  IniDoc doc;
  std::istringstream in(text);
  std::string line, section = "";
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // strip comments
    for (char marker : {'#', ';'}) {
      const auto pos = line.find(marker);
      if (pos != std::string::npos) line = line.substr(0, pos);
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError(origin + " line " + std::to_string(line_no) +
                         ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      doc[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin + " line " + std::to_string(line_no) +
                       ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError(origin + " line " + std::to_string(line_no) +
                       ": empty key");
    doc[section][key] = value;
  }
  return doc;
}

ModelSpec parse_general_model(const Section& sec, const std::string& origin) {
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = sec.find(key);
    if (it == sec.end())
      throw ParseError(origin + ": general model missing key '" + key + "'");
    return it->second;
  };
  auto opt = [&](const std::string& key,
                 const std::string& fallback) -> std::string {
    auto it = sec.find(key);
    return it == sec.end() ? fallback : it->second;
  };

  ModelSpec m;
  m.p = static_cast<int>(parse_long(need("p"), origin + " (p)"));
  m.q = static_cast<int>(parse_long(need("q"), origin + " (q)"));
  m.F = Schedule<Mat>(parse_matrix(need("F"), origin + " (F)"));
  m.V = Schedule<Mat>(parse_matrix(need("V"), origin + " (V)"));
  for (int k = 0; k < 2; ++k) {
    const std::string suffix = std::to_string(k);
    m.G[k] = Schedule<Mat>(parse_matrix(need("G" + suffix), origin));
    m.gamma[k] = Schedule<Vec>(
        Vec(parse_matrix(opt("gamma" + suffix, "0"), origin).reshaped()));
    if (m.gamma[k].at(1).size() == 1 && m.q > 1)
      m.gamma[k] = Schedule<Vec>(Vec::Zero(m.q));
    m.W[k] = Schedule<Mat>(parse_matrix(need("W" + suffix), origin));
    m.init.mean[k] = Vec(
        parse_matrix(opt("init_mean" + suffix, "0"), origin).reshaped());
    if (m.init.mean[k].size() == 1 && m.q > 1)
      m.init.mean[k] = Vec::Zero(m.q);
    m.init.cov[k] =
        parse_matrix(opt("init_cov" + suffix, "0"), origin);
    if (m.init.cov[k].size() == 1 && m.q > 1)
      m.init.cov[k] = Mat::Zero(m.q, m.q);
  }
  m.init.prob0 = parse_double(opt("prob0", "1"), origin + " (prob0)");
  m.sw.alpha[0] = parse_double(opt("alpha0", "0"), origin);
  m.sw.alpha[1] = parse_double(opt("alpha1", "0"), origin);
  m.sw.zeta[0] = parse_double(opt("zeta0", "0"), origin);
  m.sw.zeta[1] = parse_double(opt("zeta1", "0"), origin);
  const Mat b0 = parse_matrix(opt("beta0", "0"), origin);
  const Mat b1 = parse_matrix(opt("beta1", "0"), origin);
  if (sec.count("beta0")) {
    m.sw.beta[0] = Vec(b0.reshaped());
    m.sw.beta[1] = Vec(b1.reshaped());
    m.sw.d = static_cast<int>(m.sw.beta[0].size());
  } else {
    m.sw.d = 0;
    m.sw.beta[0] = Vec::Zero(0);
    m.sw.beta[1] = Vec::Zero(0);
  }
  return m;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"model",
       {"preset", "covariates", "L", "rho", "normalize", "p", "q", "F", "V",
        "G0", "G1", "gamma0", "gamma1", "W0", "W1", "init_mean0", "init_mean1",
        "init_cov0", "init_cov1", "prob0", "alpha0", "alpha1", "beta0", "beta1",
        "zeta0", "zeta1"}},
      {"init", {}},  // free-form parameter names
      {"em", {"n_max", "d_em", "kappa", "lambda"}},
      {"optimizer", {"max_evals", "fd_step", "grad_tol", "f_tol", "history"}},
      {"bootstrap", {"B", "level"}},
      {"simulate", {"m", "n", "setting", "delta", "missing_rate"}},
      {"bench", {"m_values", "repeats", "iterations"}},
      {"run", {"seed", "threads", "out"}}};

  const IniDoc doc = parse_ini(text, origin);
  for (const auto& [section, entries] : doc) {
    auto it = known.find(section);
    if (it == known.end())
      throw ParseError(origin + ": unknown section [" + section + "]");
    if (section == "init") continue;
    for (const auto& [key, value] : entries)
      if (std::find(it->second.begin(), it->second.end(), key) ==
          it->second.end())
        throw ParseError(origin + ": unknown key '" + key + "' in [" +
                         section + "]");
  }

  RunConfig cfg;
  auto get = [&](const std::string& section,
                 const std::string& key) -> std::optional<std::string> {
    auto s = doc.find(section);
    if (s == doc.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  };

  if (auto v = get("model", "preset")) cfg.preset = *v;
  if (cfg.preset != "temperature" && cfg.preset != "general")
    throw ParseError(origin + ": unknown preset '" + cfg.preset + "'");
  if (auto v = get("model", "covariates"))
    cfg.covariates = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("model", "L"))
    cfg.feedback.L = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("model", "rho")) cfg.feedback.rho = parse_double(*v, origin);
  if (auto v = get("model", "normalize"))
    cfg.feedback.normalize = parse_bool(*v, origin);
  if (cfg.preset == "general") {
    auto s = doc.find("model");
    cfg.general_model = parse_general_model(s->second, origin);
    cfg.general_model->sw.feedback = cfg.feedback;
    cfg.general_model->validate();
  }

  if (auto s = doc.find("init"); s != doc.end())
    for (const auto& [key, value] : s->second)
      cfg.init_values[key] = parse_double(value, origin + " [init] " + key);

  if (auto v = get("em", "n_max"))
    cfg.em.n_max = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("em", "d_em")) cfg.em.d_em = parse_double(*v, origin);
  if (auto v = get("em", "kappa")) cfg.em.kappa = parse_double(*v, origin);
  if (auto v = get("em", "lambda")) cfg.em.lambda = parse_double(*v, origin);

  if (auto v = get("optimizer", "max_evals"))
    cfg.em.optimizer.max_evals = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("optimizer", "fd_step"))
    cfg.em.optimizer.fd_step = parse_double(*v, origin);
  if (auto v = get("optimizer", "grad_tol"))
    cfg.em.optimizer.grad_tol = parse_double(*v, origin);
  if (auto v = get("optimizer", "f_tol"))
    cfg.em.optimizer.f_tol = parse_double(*v, origin);
  if (auto v = get("optimizer", "history"))
    cfg.em.optimizer.history = static_cast<int>(parse_long(*v, origin));

  if (auto v = get("bootstrap", "B"))
    cfg.bootstrap_b = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("bootstrap", "level"))
    cfg.bootstrap_level = parse_double(*v, origin);

  if (auto v = get("simulate", "m"))
    cfg.sim.m = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("simulate", "n"))
    cfg.sim.n = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("simulate", "setting")) {
    if (*v == "positive")
      cfg.sim.setting = FeedbackSetting::Positive;
    else if (*v == "negative")
      cfg.sim.setting = FeedbackSetting::Negative;
    else
      throw ParseError(origin + ": setting must be positive or negative");
  }
  if (auto v = get("simulate", "delta"))
    cfg.sim.delta = parse_double(*v, origin);
  if (auto v = get("simulate", "missing_rate"))
    cfg.sim.missing_rate = parse_double(*v, origin);
  cfg.sim.feedback = cfg.feedback;

  if (auto v = get("bench", "m_values")) {
    cfg.bench_m.clear();
    std::istringstream is(*v);
    std::string tok;
    while (is >> tok)
      cfg.bench_m.push_back(static_cast<int>(parse_long(tok, origin)));
    if (cfg.bench_m.empty())
      throw ParseError(origin + ": empty bench m_values");
  }
  if (auto v = get("bench", "repeats"))
    cfg.bench_repeats = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("bench", "iterations"))
    cfg.bench_iterations = static_cast<int>(parse_long(*v, origin));

  if (auto v = get("run", "seed"))
    cfg.seed = static_cast<uint64_t>(parse_long(*v, origin));
  if (auto v = get("run", "threads"))
    cfg.threads = static_cast<int>(parse_long(*v, origin));
  if (auto v = get("run", "out")) cfg.out_dir = *v;

  return cfg;
}

RunConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path), path);
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[model]\n";
  out << "preset = " << cfg.preset << "\n";
  out << "covariates = " << cfg.covariates << "\n";
  out << "L = " << cfg.feedback.L << "\n";
  out << "rho = " << format_double(cfg.feedback.rho) << "\n";
  out << "normalize = " << (cfg.feedback.normalize ? "true" : "false") << "\n";
  if (cfg.general_model) {
    const ModelSpec& m = *cfg.general_model;
    out << "p = " << m.p << "\nq = " << m.q << "\n";
    out << "F = " << format_matrix(m.F.at(1)) << "\n";
    out << "V = " << format_matrix(m.V.at(1)) << "\n";
    for (int k = 0; k < 2; ++k) {
      out << "G" << k << " = " << format_matrix(m.G[k].at(1)) << "\n";
      out << "gamma" << k << " = " << format_matrix(m.gamma[k].at(1)) << "\n";
      out << "W" << k << " = " << format_matrix(m.W[k].at(1)) << "\n";
      out << "init_mean" << k << " = " << format_matrix(m.init.mean[k]) << "\n";
      out << "init_cov" << k << " = " << format_matrix(m.init.cov[k]) << "\n";
    }
    out << "prob0 = " << format_double(m.init.prob0) << "\n";
    out << "alpha0 = " << format_double(m.sw.alpha[0]) << "\n";
    out << "alpha1 = " << format_double(m.sw.alpha[1]) << "\n";
    if (m.sw.d > 0) {
      out << "beta0 = " << format_matrix(m.sw.beta[0].transpose()) << "\n";
      out << "beta1 = " << format_matrix(m.sw.beta[1].transpose()) << "\n";
    }
    out << "zeta0 = " << format_double(m.sw.zeta[0]) << "\n";
    out << "zeta1 = " << format_double(m.sw.zeta[1]) << "\n";
  }
  out << "\n[init]\n";
  for (const auto& [k, v] : cfg.init_values)
    out << k << " = " << format_double(v) << "\n";
  out << "\n[em]\n";
  out << "n_max = " << cfg.em.n_max << "\n";
  out << "d_em = " << format_double(cfg.em.d_em) << "\n";
  out << "kappa = " << format_double(cfg.em.kappa) << "\n";
  out << "lambda = " << format_double(cfg.em.lambda) << "\n";
  out << "\n[optimizer]\n";
  out << "max_evals = " << cfg.em.optimizer.max_evals << "\n";
  out << "fd_step = " << format_double(cfg.em.optimizer.fd_step) << "\n";
  out << "grad_tol = " << format_double(cfg.em.optimizer.grad_tol) << "\n";
  out << "f_tol = " << format_double(cfg.em.optimizer.f_tol) << "\n";
  out << "history = " << cfg.em.optimizer.history << "\n";
  out << "\n[bootstrap]\n";
  out << "B = " << cfg.bootstrap_b << "\n";
  out << "level = " << format_double(cfg.bootstrap_level) << "\n";
  out << "\n[simulate]\n";
  out << "m = " << cfg.sim.m << "\n";
  out << "n = " << cfg.sim.n << "\n";
  out << "setting = "
      << (cfg.sim.setting == FeedbackSetting::Positive ? "positive"
                                                       : "negative")
      << "\n";
  out << "delta = " << format_double(cfg.sim.delta) << "\n";
  out << "missing_rate = " << format_double(cfg.sim.missing_rate) << "\n";
  out << "\n[bench]\n";
  out << "m_values =";
  for (int m : cfg.bench_m) out << " " << m;
  out << "\n";
  out << "repeats = " << cfg.bench_repeats << "\n";
  out << "iterations = " << cfg.bench_iterations << "\n";
  out << "\n[run]\n";
  out << "seed = " << cfg.seed << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "out = " << cfg.out_dir << "\n";
  return out.str();
}

void config_set(RunConfig& cfg, const std::string& key,
                const std::string& value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos)
    throw ConfigError("config key must be section.key: " + key);
  // Round-trip through the parser so validation stays in one place.
  const std::string section = key.substr(0, dot);
  const std::string name = key.substr(dot + 1);
  std::string doc = format_config(cfg);
  doc += "\n[" + section + "]\n" + name + " = " + value + "\n";
  cfg = parse_config(doc, "config_set(" + key + ")");
}

std::string config_get(const RunConfig& cfg, const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos)
    throw ConfigError("config key must be section.key: " + key);
  const std::string section = key.substr(0, dot);
  const std::string name = key.substr(dot + 1);
  const IniDoc doc = parse_ini(format_config(cfg), "config_get");
  auto s = doc.find(section);
  if (s == doc.end()) throw ConfigError("unknown config section: " + section);
  auto k = s->second.find(name);
  if (k == s->second.end())
    throw ConfigError("unknown config key: " + key);
  return k->second;
}

ParameterSet initial_parameters(const RunConfig& cfg) {
  if (cfg.preset == "general")
    throw ConfigError("estimation requires the temperature preset");
  ParameterSet p = temperature_parameters(cfg.covariates);
  for (const auto& [name, value] : cfg.init_values) {
    if (!p.has(name))
      throw ConfigError("[init] names unknown parameter '" + name + "'");
    p.set(name, value);
  }
  return p;
}

ModelBuilder model_builder(const RunConfig& cfg) {
  if (cfg.preset == "general") {
    const ModelSpec fixed = *cfg.general_model;
    return [fixed](const ParameterSet&) { return fixed; };
  }
  return temperature_builder(cfg.feedback);
}

void Table::write(const std::string& path) const {
  write_text_file(path, format());
}

std::string Table::format() const {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) out += ",";
    out += header[j];
  }
  out += "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw IoError("table row width does not match header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ",";
      out += row[j];
    }
    out += "\n";
  }
  return out;
}

Table parse_table(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line, ',');
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    t.rows.push_back(split(line, ','));
  }
  return t;
}

}  // namespace mssfs
