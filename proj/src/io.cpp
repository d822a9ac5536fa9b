#include "bodelim/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "bodelim/error.hpp"

namespace bodelim {

namespace {

void put_number(std::ostream& os, double x) {
  std::array<char, 32> buf;
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  os.write(buf.data(), r.ptr - buf.data());
}

double parse_number(std::string_view cell) {
  while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.remove_suffix(1);
  double x = 0.0;
  const char* first = cell.data();
  if (!cell.empty() && cell.front() == '+') ++first;
  const auto r = std::from_chars(first, cell.data() + cell.size(), x);
  if (r.ec != std::errc() || r.ptr != cell.data() + cell.size())
    throw DomainError("csv: cannot parse number '" + std::string(cell) + "'");
  return x;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto k = line.find(',');
    out.push_back(line.substr(0, k));
    if (k == std::string_view::npos) break;
    line.remove_prefix(k + 1);
  }
  return out;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), 8)) throw DomainError("BLIMSIG1: truncated block");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

double num_or_nan(const Json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

IntegralResult integral_from_json(const Json& j) {
  IntegralResult r;
  r.status = status_from_string(j.at("status").get<std::string>());
  r.note = get_or<std::string>(j, "note", "");
  if (r.status == IntegralStatus::kConverged) {
    r.value = num_or_nan(j.at("value"));
    r.abs_error_estimate = num_or_nan(j.at("abs_error_estimate"));
  } else {
    r = IntegralResult::with_status(r.status, r.note);
  }
  return r;
}

std::optional<IntegralResult> optional_integral(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return integral_from_json(*it);
}

std::string cell(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

}  // namespace

void write_signal_csv(const SignalBundle& bundle, std::ostream& os) {
  os << "t";
  for (const auto& c : kSignalColumns) os << ',' << c;
  os << '\n';
  std::vector<const std::vector<double>*> cols;
  for (const auto& c : kSignalColumns) cols.push_back(bundle.has(c) ? &bundle.channel(c) : nullptr);
  const double nan = std::nan("");
  for (std::size_t k = 0; k < bundle.samples(); ++k) {
    put_number(os, double(k) * bundle.dt);
    for (const auto* c : cols) {
      os << ',';
      put_number(os, c ? (*c)[k] : nan);
    }
    os << '\n';
  }
}

SignalBundle read_signal_csv(std::istream& is) {
  const CsvTable t = read_csv(is);
  std::vector<std::string> expected{"t"};
  expected.insert(expected.end(), kSignalColumns.begin(), kSignalColumns.end());
  if (t.header != expected) throw DomainError("signal csv: header must be t,u,v,w,y,d,e");
  SignalBundle b;
  const auto& time = t.column("t");
  b.dt = time.size() > 1 ? time[1] - time[0] : 0.0;
  for (const auto& c : kSignalColumns) {
    const auto& col = t.column(c);
    if (std::all_of(col.begin(), col.end(), [](double x) { return std::isnan(x); })) continue;
    b.channels[c] = col;
  }
  return b;
}

void write_signal_binary(const SignalBundle& bundle, std::ostream& os) {
  os.write("BLIMSIG1", 8);
  const std::uint64_t n = bundle.samples();
  put_u64(os, n);
  put_u64(os, std::bit_cast<std::uint64_t>(bundle.dt));
  const double nan = std::nan("");
  for (const auto& c : kSignalColumns) {
    const std::vector<double>* col = bundle.has(c) ? &bundle.channel(c) : nullptr;
    for (std::uint64_t k = 0; k < n; ++k) put_u64(os, std::bit_cast<std::uint64_t>(col ? (*col)[k] : nan));
  }
}

SignalBundle read_signal_binary(std::istream& is) {
  std::array<char, 8> magic;
  if (!is.read(magic.data(), 8) || std::memcmp(magic.data(), "BLIMSIG1", 8) != 0)
    throw DomainError("BLIMSIG1: bad magic");
  const std::uint64_t n = get_u64(is);
  SignalBundle b;
  b.dt = std::bit_cast<double>(get_u64(is));
  for (const auto& c : kSignalColumns) {
    std::vector<double> col(n);
    bool any = false;
    for (std::uint64_t k = 0; k < n; ++k) {
      col[k] = std::bit_cast<double>(get_u64(is));
      any = any || !std::isnan(col[k]);
    }
    if (any) b.channels[c] = std::move(col);
  }
  return b;
}

void write_spectrum_csv(const SpectralEstimate& est, std::ostream& os) {
  os << "omega,re,im\n";
  for (std::size_t k = 0; k < est.omega.size(); ++k) {
    put_number(os, est.omega[k]);
    os << ',';
    put_number(os, est.values[k].real());
    os << ',';
    put_number(os, est.values[k].imag());
    os << '\n';
  }
}

SpectralEstimate read_spectrum_csv(std::istream& is, std::string x, std::string y) {
  const CsvTable t = read_csv(is);
  if (t.header != std::vector<std::string>{"omega", "re", "im"})
    throw DomainError("spectrum csv: header must be omega,re,im");
  SpectralEstimate e;
  e.x = std::move(x);
  e.y = std::move(y);
  e.omega = t.column("omega");
  const auto& re = t.column("re");
  const auto& im = t.column("im");
  for (std::size_t k = 0; k < re.size(); ++k) e.values.emplace_back(re[k], im[k]);
  return e;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DomainError("csv: no column '" + name + "'");
  return columns[static_cast<std::size_t>(it - header.begin())];
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw DomainError("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  for (auto h : split(line)) t.header.emplace_back(h);
  t.columns.resize(t.header.size());
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size())
      throw DomainError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(t.header.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) t.columns[i].push_back(parse_number(cells[i]));
  }
  return t;
}

Json to_json(const SpectralEstimate& est) {
  Json re = Json::array(), im = Json::array();
  for (const Complex& v : est.values) {
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  return {{"x", est.x},
          {"y", est.y},
          {"window", est.window_id},
          {"nperseg", est.nperseg},
          {"overlap", est.overlap},
          {"segments_used", est.segments_used},
          {"effective_segments", est.effective_segments()},
          {"omega", est.omega},
          {"re", re},
          {"im", im}};
}

Json to_json(const IntegralResult& r) {
  return {{"value", r.value},
          {"abs_error_estimate", r.abs_error_estimate},
          {"status", std::string(to_string(r.status))},
          {"note", r.note}};
}

Json to_json(const BoundReport& b) {
  const auto roots = [](const std::vector<Complex>& v) {
    Json a = Json::array();
    for (const Complex& z : v) a.push_back({z.real(), z.imag()});
    return a;
  };
  return {{"sens_bound", b.sens_bound},
          {"comp_bound", b.comp_bound},
          {"plant_log_integral", to_json(b.plant_log_integral)},
          {"plant_log_integral_weighted", to_json(b.plant_log_integral_weighted)},
          {"load_bound", to_json(b.load_bound)},
          {"noise_bound", to_json(b.noise_bound)},
          {"marginal_poles", roots(b.marginal_poles)},
          {"marginal_zeros", roots(b.marginal_zeros)}};
}

Json to_json(const LimitReport& rep) {
  Json ineq = Json::array();
  for (const auto& r : rep.inequalities) {
    Json j = {{"id", r.id},
              {"lhs", r.lhs},
              {"rhs", r.rhs},
              {"analytic_bound", to_json(r.analytic_bound)},
              {"compared_value", to_json(r.compared_value)},
              {"compared_bound", to_json(r.compared_bound)},
              {"verdict", std::string(to_string(r.verdict))},
              {"slack_used", r.slack_used},
              {"note", r.note}};
    j["quadrature_value"] = r.quadrature_value ? to_json(*r.quadrature_value) : Json();
    j["empirical_integral"] = r.empirical_integral ? to_json(*r.empirical_integral) : Json();
    j["mi_rate_difference"] = r.mi_rate_difference ? Json(*r.mi_rate_difference) : Json();
    ineq.push_back(std::move(j));
  }
  Json checks = Json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"id", c.id},
                      {"value", c.value},
                      {"reference", c.reference},
                      {"tolerance", c.tolerance},
                      {"passed", c.passed},
                      {"skipped", c.skipped},
                      {"note", c.note}});
  Json curves = Json::array();
  for (const auto& c : rep.curves)
    curves.push_back({{"kind", c.kind},
                      {"inverted", c.inverted},
                      {"omega", c.omega},
                      {"estimate", c.estimate},
                      {"exact", c.exact}});
  return {{"system_id", rep.system_id},
          {"worst_verdict", std::string(to_string(rep.worst()))},
          {"inequalities", ineq},
          {"checks", checks},
          {"curves", curves},
          {"notes", rep.notes}};
}

Json to_json(const std::vector<LimitReport>& reps) {
  Json a = Json::array();
  for (const auto& r : reps) a.push_back(to_json(r));
  return a;
}

LimitReport report_from_json(const Json& j) {
  try {
    LimitReport rep;
    rep.system_id = j.at("system_id").get<std::string>();
    for (const auto& r : j.at("inequalities")) {
      InequalityRecord x;
      x.id = r.at("id").get<std::string>();
      x.lhs = get_or<std::string>(r, "lhs", "");
      x.rhs = get_or<std::string>(r, "rhs", "");
      x.analytic_bound = integral_from_json(r.at("analytic_bound"));
      x.quadrature_value = optional_integral(r, "quadrature_value");
      x.empirical_integral = optional_integral(r, "empirical_integral");
      if (r.contains("mi_rate_difference") && !r["mi_rate_difference"].is_null())
        x.mi_rate_difference = r["mi_rate_difference"].get<double>();
      x.compared_value = integral_from_json(r.at("compared_value"));
      x.compared_bound = integral_from_json(r.at("compared_bound"));
      x.verdict = verdict_from_string(r.at("verdict").get<std::string>());
      x.slack_used = num_or_nan(r.at("slack_used"));
      x.note = get_or<std::string>(r, "note", "");
      rep.inequalities.push_back(std::move(x));
    }
    for (const auto& c : j.at("checks")) {
      CheckRecord x;
      x.id = c.at("id").get<std::string>();
      x.value = num_or_nan(c.at("value"));
      x.reference = num_or_nan(c.at("reference"));
      x.tolerance = num_or_nan(c.at("tolerance"));
      x.passed = c.at("passed").get<bool>();
      x.skipped = c.at("skipped").get<bool>();
      x.note = get_or<std::string>(c, "note", "");
      rep.checks.push_back(std::move(x));
    }
    if (j.contains("curves"))
      for (const auto& c : j.at("curves")) {
        CurveRecord x;
        x.kind = c.at("kind").get<std::string>();
        x.inverted = c.at("inverted").get<bool>();
        for (const char* key : {"omega", "estimate", "exact"}) {
          std::vector<double>& dst = key[0] == 'o' ? x.omega : key[1] == 's' ? x.estimate : x.exact;
          for (const auto& v : c.at(key)) dst.push_back(num_or_nan(v));
        }
        rep.curves.push_back(std::move(x));
      }
    if (j.contains("notes")) rep.notes = j.at("notes").get<std::vector<std::string>>();
    return rep;
  } catch (const Json::exception& e) {
    throw DomainError(std::string("report json: ") + e.what());
  }
}

std::vector<LimitReport> reports_from_json(const Json& j) {
  if (!j.is_array()) throw DomainError("report json: expected an array of reports");
  std::vector<LimitReport> out;
  for (const auto& r : j) out.push_back(report_from_json(r));
  return out;
}

Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::kHolds, Verdict::kHoldsWithEquality, Verdict::kViolated,
                    Verdict::kSkippedDivergent, Verdict::kSkippedPrecondition})
    if (to_string(v) == s) return v;
  throw DomainError("unknown verdict '" + s + "'");
}

IntegralStatus status_from_string(const std::string& s) {
  for (IntegralStatus v : {IntegralStatus::kConverged, IntegralStatus::kDivergentPlus,
                           IntegralStatus::kDivergentMinus, IntegralStatus::kSingular})
    if (to_string(v) == s) return v;
  throw DomainError("unknown integral status '" + s + "'");
}

std::string report_table(const std::vector<LimitReport>& reps) {
  std::ostringstream os;
  for (const auto& rep : reps) {
    os << "== " << rep.system_id << "  worst: " << to_string(rep.worst()) << '\n';
    for (const auto& r : rep.inequalities)
      os << "  " << std::left << std::setw(36) << r.id << std::setw(22) << to_string(r.verdict)
         << std::right << std::setw(14) << cell(r.compared_value.value) << " >= " << std::setw(12)
         << cell(r.compared_bound.value) << "  slack " << cell(r.slack_used) << '\n';
    for (const auto& c : rep.checks)
      os << "  " << std::left << std::setw(36) << c.id << std::setw(22)
         << (c.skipped ? "skipped" : c.passed ? "pass" : "fail") << std::right << std::setw(14)
         << cell(c.value) << " ~  " << std::setw(12) << cell(c.reference) << "  tol " << cell(c.tolerance)
         << '\n';
    for (const auto& n : rep.notes) os << "  note: " << n << '\n';
  }
  return os.str();
}

void write_curve_csv(const CurveRecord& c, std::ostream& os) {
  os << "omega,abs_T,estimate,integrand\n";
  for (std::size_t k = 0; k < c.omega.size(); ++k) {
    put_number(os, c.omega[k]);
    os << ',';
    put_number(os, c.exact[k]);
    os << ',';
    put_number(os, c.estimate[k]);
    os << ',';
    put_number(os, std::log(c.estimate[k]));
    os << '\n';
  }
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f || !f.write(text.data(), static_cast<std::streamsize>(text.size())))
    throw std::runtime_error("cannot write " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace bodelim
