#include "bistab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "bistab/errors.hpp"
#include "bistab/observability.hpp"

namespace bistab {

std::string to_string(Mode m) {
    switch (m) {
        case Mode::simulate: return "simulate";
        case Mode::observability: return "observability";
        case Mode::sweep: return "sweep";
        case Mode::preset: return "preset";
    }
    return "?";
}

namespace {

const std::set<std::string> kPresets = {"paper-3.1-coupled", "paper-3.2-logdecay", "paper-3.3-schrodinger",
                                        "oracle-2d"};
constexpr Real kPi = 3.14159265358979323846;

// A bad value; the caller attaches key and line.
struct ValueError {
    std::string what;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(t);
    return out;
}

Real to_real(const std::string& s) {
    Real v = 0.0;
    const char* begin = s.data() + (s.size() > 1 && s[0] == '+' ? 1 : 0);
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ValueError{"expected a finite real number, got '" + s + "'"};
    return v;
}

long long to_integer(const std::string& s) {
    long long v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValueError{"expected an integer, got '" + s + "'"};
    return v;
}

int to_int(const std::string& s) {
    const long long v = to_integer(s);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ValueError{"integer out of range: '" + s + "'"};
    return static_cast<int>(v);
}

std::uint64_t to_seed(const std::string& s) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValueError{"expected a nonnegative integer, got '" + s + "'"};
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ValueError{"expected true or false, got '" + s + "'"};
}

// "1.5", "-2i", "0+1i", "3e-2-4.5i"
Complex to_complex(const std::string& s) {
    if (s.empty()) throw ValueError{"empty complex number"};
    if (s.back() != 'i') return {to_real(s), 0.0};
    const std::string body = s.substr(0, s.size() - 1);
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;) {
        if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    auto imag_part = [&](const std::string& t) {
        if (t.empty() || t == "+") return 1.0;
        if (t == "-") return -1.0;
        return to_real(t);
    };
    try {
        if (split == std::string::npos) return {0.0, imag_part(body)};
        return {to_real(body.substr(0, split)), imag_part(body.substr(split))};
    } catch (const ValueError&) {
        throw ValueError{"expected a complex number like 0+1i, got '" + s + "'"};
    }
}

std::string fmt(Real v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string fmt(Complex z) {
    std::string out = fmt(z.real());
    const Real im = z.imag();
    out += std::signbit(im) ? "-" : "+";
    return out + fmt(std::abs(im)) + "i";
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f, const char* sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + f(v[i]);
    return out;
}

std::pair<Real, Real> to_interval(const std::string& s) {
    auto t = tokens(s);
    if (t.size() == 1) {
        const auto colon = t[0].find(':');
        if (colon != std::string::npos) t = {t[0].substr(0, colon), t[0].substr(colon + 1)};
    }
    if (t.size() != 2) throw ValueError{"expected an interval 'x0 x1', got '" + s + "'"};
    const Real a = to_real(t[0]), b = to_real(t[1]);
    if (!(0.0 <= a && a < b && b <= kPi + 1e-12)) throw ValueError{"interval must satisfy 0 <= x0 < x1 <= pi"};
    return {a, b};
}

void check_bound_descriptor(const std::string& d) {
    if (d == "log_square" || d == "hfun_inverse" || d == "kfun_inverse") return;
    if (d.rfind("power:", 0) == 0) {
        if (!(to_real(d.substr(6)) > 0.0)) throw ValueError{"power bound needs p > 0"};
        return;
    }
    throw ValueError{"unknown bound '" + d + "' (power:p, log_square, hfun_inverse, kfun_inverse)"};
}

void check_hfun_descriptor(const std::string& d) {
    if (d == "logexp:auto") return;
    try {
        (void)HFunction::from_descriptor(d);
    } catch (const std::exception& e) {
        throw ValueError{e.what()};
    }
}

Real positive(Real v, const char* what = "must be > 0") {
    if (!(v > 0.0)) throw ValueError{what};
    return v;
}

int at_least(int v, int lo) {
    if (v < lo) throw ValueError{"must be >= " + std::to_string(lo)};
    return v;
}

template <class T>
std::string opt_real(const std::optional<T>& v) {
    return v ? fmt(*v) : "auto";
}

struct Key {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

// Ordered; serialize_config follows this order.
const std::vector<std::pair<std::string, Key>>& keys() {
    static const std::vector<std::pair<std::string, Key>> table = {
        {"mode",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "simulate") c.mode = Mode::simulate;
              else if (v == "observability") c.mode = Mode::observability;
              else if (v == "sweep") c.mode = Mode::sweep;
              else if (v == "preset") c.mode = Mode::preset;
              else throw ValueError{"expected simulate, observability, sweep or preset, got '" + v + "'"};
          },
          [](const ExperimentConfig& c) { return to_string(c.mode); }}},
        {"preset.name",
         {[](ExperimentConfig& c, const std::string& v) {
              if (!kPresets.count(v)) throw ValueError{"unknown preset '" + v + "'"};
              c.preset = v;
          },
          [](const ExperimentConfig& c) { return c.preset.empty() ? std::string("none") : c.preset; }}},
        {"model.family",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "custom") {
                  c.family.reset();
                  return;
              }
              try {
                  c.family = models::family_from_string(v);
              } catch (const std::exception&) {
                  throw ValueError{"expected wave1d, coupled_wave1d, schrodinger1d or custom, got '" + v + "'"};
              }
          },
          [](const ExperimentConfig& c) { return c.family ? models::to_string(*c.family) : "custom"; }}},
        {"model.n_modes",
         {[](ExperimentConfig& c, const std::string& v) { c.n_modes = at_least(to_int(v), 1); },
          [](const ExperimentConfig& c) { return std::to_string(c.n_modes); }}},
        {"model.damping.kind",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "global") c.damping.kind = models::DampingProfile::Kind::global;
              else if (v == "interval") c.damping.kind = models::DampingProfile::Kind::interval;
              else throw ValueError{"expected global or interval, got '" + v + "'"};
          },
          [](const ExperimentConfig& c) {
              return std::string(c.damping.kind == models::DampingProfile::Kind::global ? "global" : "interval");
          }}},
        {"model.damping.interval",
         {[](ExperimentConfig& c, const std::string& v) {
              std::tie(c.damping.x0, c.damping.x1) = to_interval(v);
          },
          [](const ExperimentConfig& c) { return fmt(c.damping.x0) + " " + fmt(c.damping.x1); }}},
        {"model.damping.amplitude",
         {[](ExperimentConfig& c, const std::string& v) { c.damping.amplitude = positive(to_real(v)); },
          [](const ExperimentConfig& c) { return fmt(c.damping.amplitude); }}},
        {"model.beta",
         {[](ExperimentConfig& c, const std::string& v) {
              c.beta = to_real(v);
              if (!(std::abs(c.beta) < 1.0)) throw ValueError{"|beta| must be < 1"};
          },
          [](const ExperimentConfig& c) { return fmt(c.beta); }}},
        {"model.theta",
         {[](ExperimentConfig& c, const std::string& v) {
              c.theta = to_real(v);
              if (!(c.theta > 0.0 && c.theta < 1.0)) throw ValueError{"theta must lie in (0, 1)"};
          },
          [](const ExperimentConfig& c) { return fmt(c.theta); }}},
        {"model.custom.eigenvalues",
         {[](ExperimentConfig& c, const std::string& v) {
              c.custom.eigenvalues.clear();
              if (v == "none") return;
              for (const auto& t : tokens(v)) c.custom.eigenvalues.push_back(to_complex(t));
          },
          [](const ExperimentConfig& c) {
              return c.custom.eigenvalues.empty() ? std::string("none")
                                                  : join(c.custom.eigenvalues, [](Complex z) { return fmt(z); });
          }}},
        {"model.custom.b_matrix",
         {[](ExperimentConfig& c, const std::string& v) {
              c.custom.b_matrix.resize(0, 0);
              if (v == "none") return;
              std::vector<std::vector<Complex>> rows;
              std::istringstream is(v);
              for (std::string row; std::getline(is, row, ';');) {
                  rows.emplace_back();
                  for (const auto& t : tokens(row)) rows.back().push_back(to_complex(t));
              }
              const auto n = static_cast<Eigen::Index>(rows.size());
              CMatrix b(n, n);
              for (Eigen::Index i = 0; i < n; ++i) {
                  if (static_cast<Eigen::Index>(rows[i].size()) != n)
                      throw ValueError{"b_matrix must be square, rows separated by ';'"};
                  for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rows[i][j];
              }
              c.custom.b_matrix = b;
          },
          [](const ExperimentConfig& c) {
              const CMatrix& b = c.custom.b_matrix;
              if (b.size() == 0) return std::string("none");
              std::string out;
              for (Eigen::Index i = 0; i < b.rows(); ++i) {
                  if (i) out += "; ";
                  for (Eigen::Index j = 0; j < b.cols(); ++j) out += (j ? " " : "") + fmt(b(i, j));
              }
              return out;
          }}},
        {"model.custom.k_weights",
         {[](ExperimentConfig& c, const std::string& v) {
              c.custom.k_weights.clear();
              if (v == "auto") return;
              for (const auto& t : tokens(v)) c.custom.k_weights.push_back(to_real(t));
          },
          [](const ExperimentConfig& c) {
              return c.custom.k_weights.empty() ? std::string("auto")
                                                : join(c.custom.k_weights, [](Real x) { return fmt(x); });
          }}},
        {"model.custom.snapshot",
         {[](ExperimentConfig& c, const std::string& v) { c.custom.snapshot = v == "none" ? "" : v; },
          [](const ExperimentConfig& c) { return c.custom.snapshot.empty() ? std::string("none") : c.custom.snapshot; }}},
        {"control.r",
         {[](ExperimentConfig& c, const std::string& v) {
              c.r = to_real(v);
              if (c.r > 2.0) throw ValueError{"r must be <= 2"};
          },
          [](const ExperimentConfig& c) { return fmt(c.r); }}},
        {"control.state_epsilon",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.state_epsilon.reset();
              else c.state_epsilon = positive(to_real(v));
          },
          [](const ExperimentConfig& c) { return opt_real(c.state_epsilon); }}},
        {"control.off",
         {[](ExperimentConfig& c, const std::string& v) { c.control_off = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.control_off ? "true" : "false"); }}},
        {"numerics.dt",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.dt.reset();
              else c.dt = positive(to_real(v));
          },
          [](const ExperimentConfig& c) { return opt_real(c.dt); }}},
        {"numerics.t_final",
         {[](ExperimentConfig& c, const std::string& v) { c.t_final = positive(to_real(v)); },
          [](const ExperimentConfig& c) { return fmt(c.t_final); }}},
        {"numerics.stride",
         {[](ExperimentConfig& c, const std::string& v) { c.stride = at_least(to_int(v), 1); },
          [](const ExperimentConfig& c) { return std::to_string(c.stride); }}},
        {"numerics.quad_dt",
         {[](ExperimentConfig& c, const std::string& v) { c.quad_dt = positive(to_real(v)); },
          [](const ExperimentConfig& c) { return fmt(c.quad_dt); }}},
        {"numerics.stop_energy_ratio",
         {[](ExperimentConfig& c, const std::string& v) {
              c.stop_energy_ratio = to_real(v);
              if (c.stop_energy_ratio < 0.0 || c.stop_energy_ratio >= 1.0)
                  throw ValueError{"must lie in [0, 1)"};
          },
          [](const ExperimentConfig& c) { return fmt(c.stop_energy_ratio); }}},
        {"initial.kind",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "smooth") c.initial = InitialKind::smooth;
              else if (v == "random") c.initial = InitialKind::random;
              else if (v == "mode") c.initial = InitialKind::mode;
              else throw ValueError{"expected smooth, random or mode, got '" + v + "'"};
          },
          [](const ExperimentConfig& c) {
              switch (c.initial) {
                  case InitialKind::smooth: return std::string("smooth");
                  case InitialKind::random: return std::string("random");
                  case InitialKind::mode: return std::string("mode");
              }
              return std::string("?");
          }}},
        {"initial.norm",
         {[](ExperimentConfig& c, const std::string& v) { c.initial_norm = positive(to_real(v)); },
          [](const ExperimentConfig& c) { return fmt(c.initial_norm); }}},
        {"initial.mode",
         {[](ExperimentConfig& c, const std::string& v) { c.initial_mode = at_least(to_int(v), 0); },
          [](const ExperimentConfig& c) { return std::to_string(c.initial_mode); }}},
        {"initial.seed",
         {[](ExperimentConfig& c, const std::string& v) { c.initial_seed = to_seed(v); },
          [](const ExperimentConfig& c) { return std::to_string(c.initial_seed); }}},
        {"obs.T",
         {[](ExperimentConfig& c, const std::string& v) { c.obs_horizon = positive(to_real(v)); },
          [](const ExperimentConfig& c) { return fmt(c.obs_horizon); }}},
        {"obs.flavor",
         {[](ExperimentConfig& c, const std::string& v) {
              try {
                  (void)flavor_from_string(v);
              } catch (const std::exception&) {
                  throw ValueError{"expected exact, weak-L, weak-H or null-ctrl, got '" + v + "'"};
              }
              c.obs_flavor = v;
          },
          [](const ExperimentConfig& c) { return c.obs_flavor; }}},
        {"obs.hfun",
         {[](ExperimentConfig& c, const std::string& v) {
              check_hfun_descriptor(v);
              c.obs_hfun = v;
          },
          [](const ExperimentConfig& c) { return c.obs_hfun; }}},
        {"obs.n_samples",
         {[](ExperimentConfig& c, const std::string& v) { c.obs_samples = at_least(to_int(v), 0); },
          [](const ExperimentConfig& c) { return std::to_string(c.obs_samples); }}},
        {"obs.seed",
         {[](ExperimentConfig& c, const std::string& v) { c.obs_seed = to_seed(v); },
          [](const ExperimentConfig& c) { return std::to_string(c.obs_seed); }}},
        {"obs.method",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v != "gramian" && v != "trapezoid") throw ValueError{"expected gramian or trapezoid"};
              c.obs_method = v;
          },
          [](const ExperimentConfig& c) { return c.obs_method; }}},
        {"obs.refine_steps",
         {[](ExperimentConfig& c, const std::string& v) { c.obs_refine_steps = at_least(to_int(v), 0); },
          [](const ExperimentConfig& c) { return std::to_string(c.obs_refine_steps); }}},
        {"analysis.bounds",
         {[](ExperimentConfig& c, const std::string& v) {
              c.bounds.clear();
              if (v == "none") return;
              for (const auto& t : tokens(v)) {
                  check_bound_descriptor(t);
                  c.bounds.push_back(t);
              }
          },
          [](const ExperimentConfig& c) {
              return c.bounds.empty() ? std::string("none") : join(c.bounds, [](const std::string& s) { return s; });
          }}},
        {"analysis.fit",
         {[](ExperimentConfig& c, const std::string& v) { c.fit = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.fit ? "true" : "false"); }}},
        {"analysis.split",
         {[](ExperimentConfig& c, const std::string& v) {
              c.split = to_real(v);
              if (!(c.split > 0.0 && c.split < 1.0)) throw ValueError{"split must lie in (0, 1)"};
          },
          [](const ExperimentConfig& c) { return fmt(c.split); }}},
        {"analysis.slack",
         {[](ExperimentConfig& c, const std::string& v) {
              c.slack = to_real(v);
              if (c.slack < 0.0) throw ValueError{"slack must be >= 0"};
          },
          [](const ExperimentConfig& c) { return fmt(c.slack); }}},
        {"analysis.window",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") {
                  c.window.reset();
                  return;
              }
              const auto t = tokens(v);
              if (t.size() != 2) throw ValueError{"expected 't_lo t_hi' or auto"};
              const Real lo = to_real(t[0]), hi = to_real(t[1]);
              if (!(lo > 0.0 && lo < hi)) throw ValueError{"window needs 0 < t_lo < t_hi"};
              c.window = std::make_pair(lo, hi);
          },
          [](const ExperimentConfig& c) {
              return c.window ? fmt(c.window->first) + " " + fmt(c.window->second) : std::string("auto");
          }}},
        {"checks.dissipation",
         {[](ExperimentConfig& c, const std::string& v) { c.check_dissipation = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.check_dissipation ? "true" : "false"); }}},
        {"checks.lemma2",
         {[](ExperimentConfig& c, const std::string& v) { c.check_lemma2 = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.check_lemma2 ? "true" : "false"); }}},
        {"checks.horizon",
         {[](ExperimentConfig& c, const std::string& v) {
              if (v == "auto") c.check_horizon.reset();
              else c.check_horizon = positive(to_real(v));
          },
          [](const ExperimentConfig& c) { return opt_real(c.check_horizon); }}},
        {"checks.eval_every",
         {[](ExperimentConfig& c, const std::string& v) { c.eval_every = at_least(to_int(v), 1); },
          [](const ExperimentConfig& c) { return std::to_string(c.eval_every); }}},
        {"sweep.r",
         {[](ExperimentConfig& c, const std::string& v) {
              c.sweep_r.clear();
              if (v == "none") return;
              for (const auto& t : tokens(v)) {
                  const Real r = to_real(t);
                  if (r > 2.0) throw ValueError{"r must be <= 2"};
                  c.sweep_r.push_back(r);
              }
          },
          [](const ExperimentConfig& c) {
              return c.sweep_r.empty() ? std::string("none") : join(c.sweep_r, [](Real x) { return fmt(x); });
          }}},
        {"sweep.beta",
         {[](ExperimentConfig& c, const std::string& v) {
              c.sweep_beta.clear();
              if (v == "none") return;
              for (const auto& t : tokens(v)) {
                  const Real b = to_real(t);
                  if (!(std::abs(b) < 1.0)) throw ValueError{"|beta| must be < 1"};
                  c.sweep_beta.push_back(b);
              }
          },
          [](const ExperimentConfig& c) {
              return c.sweep_beta.empty() ? std::string("none") : join(c.sweep_beta, [](Real x) { return fmt(x); });
          }}},
        {"sweep.interval",
         {[](ExperimentConfig& c, const std::string& v) {
              c.sweep_interval.clear();
              if (v == "none") return;
              for (const auto& t : tokens(v)) c.sweep_interval.push_back(to_interval(t));
          },
          [](const ExperimentConfig& c) {
              if (c.sweep_interval.empty()) return std::string("none");
              return join(c.sweep_interval,
                          [](const std::pair<Real, Real>& p) { return fmt(p.first) + ":" + fmt(p.second); });
          }}},
        {"sweep.n_modes",
         {[](ExperimentConfig& c, const std::string& v) {
              c.sweep_n_modes.clear();
              if (v == "none") return;
              for (const auto& t : tokens(v)) c.sweep_n_modes.push_back(at_least(to_int(t), 1));
          },
          [](const ExperimentConfig& c) {
              return c.sweep_n_modes.empty() ? std::string("none")
                                             : join(c.sweep_n_modes, [](int x) { return std::to_string(x); });
          }}},
        {"output.dir",
         {[](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
          [](const ExperimentConfig& c) { return c.out_dir; }}},
        {"output.emit_plots",
         {[](ExperimentConfig& c, const std::string& v) { c.emit_plots = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.emit_plots ? "true" : "false"); }}},
        {"output.svg_timestamp",
         {[](ExperimentConfig& c, const std::string& v) { c.svg_timestamp = to_bool(v); },
          [](const ExperimentConfig& c) { return std::string(c.svg_timestamp ? "true" : "false"); }}},
    };
    return table;
}

const Key* find_key(const std::string& name) {
    for (const auto& [k, v] : keys())
        if (k == name) return &v;
    return nullptr;
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
    if (c.mode == Mode::preset) {
        if (c.preset.empty()) throw ConfigError("mode = preset requires preset.name");
        return;
    }
    if (!c.family) {
        if (c.custom.snapshot.empty()) {
            if (c.custom.eigenvalues.empty())
                throw ConfigError("model.family = custom requires model.custom.eigenvalues or model.custom.snapshot");
            if (c.custom.b_matrix.rows() != static_cast<Eigen::Index>(c.custom.eigenvalues.size()))
                throw ConfigError("model.custom.b_matrix must be n x n with n = number of eigenvalues");
            if (!c.custom.k_weights.empty() && c.custom.k_weights.size() != c.custom.eigenvalues.size())
                throw ConfigError("model.custom.k_weights must have one weight per eigenvalue");
        }
    }
    if (c.family == models::Family::coupled_wave1d && !(std::abs(c.beta) < 1.0))
        throw ConfigError("model.beta must satisfy |beta| < 1");
    if (c.mode == Mode::sweep && c.sweep_r.empty() && c.sweep_beta.empty() && c.sweep_interval.empty() &&
        c.sweep_n_modes.empty())
        throw ConfigError("mode = sweep requires at least one of sweep.r, sweep.beta, sweep.interval, sweep.n_modes");
    if (c.window && c.window->first >= c.window->second) throw ConfigError("analysis.window needs t_lo < t_hi");
    if (c.out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::map<std::string, int> seen;
    std::istringstream is(text);
    int line_no = 0;
    for (std::string raw; std::getline(is, raw);) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key before '='", line_no);
        if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no);
        const Key* k = find_key(key);
        if (!k) throw ConfigError("unknown key '" + key + "'", line_no);
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")",
                              line_no);
        seen[key] = line_no;
        try {
            k->set(cfg, value);
        } catch (const ValueError& e) {
            throw ConfigError("'" + key + "': " + e.what, line_no);
        }
    }
    if (!seen.count("mode")) throw ConfigError("missing required key 'mode'");
    if (cfg.mode != Mode::preset && !seen.count("model.family"))
        throw ConfigError("missing required key 'model.family'");
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    for (const auto& [name, key] : keys()) {
        if (name == "preset.name" && cfg.preset.empty()) continue;
        out += name + " = " + key.get(cfg) + "\n";
    }
    return out;
}

std::string config_reference() {
    ExperimentConfig defaults;
    defaults.family = models::Family::wave1d;
    return serialize_config(defaults);
}

}  // namespace bistab
