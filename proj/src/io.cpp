#include "bitmat/io.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "bitmat/errors.hpp"
#include "bitmat/logging.hpp"

namespace bitmat::io {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ParseError(where + ": expected an integer, got '" + s + "'");
  }
  return v;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\r':
        out += "\\r";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Canonical JSON emitter: the callers list keys in sorted order, numbers go
// through format_double, and there is no whitespace variation to drift.
class JsonOut {
 public:
  void begin_object() {
    sep();
    buf_ += '{';
    first_ = true;
  }
  void end_object() {
    buf_ += '}';
    first_ = false;
  }
  void begin_array() {
    sep();
    buf_ += '[';
    first_ = true;
  }
  void end_array() {
    buf_ += ']';
    first_ = false;
  }
  void key(const std::string& k) {
    sep();
    buf_ += '"';
    buf_ += json_escape(k);
    buf_ += "\":";
    first_ = true;  // value follows without comma
  }
  void number(double v) {
    sep();
    buf_ += format_double(v);
  }
  void integer(std::int64_t v) {
    sep();
    buf_ += std::to_string(v);
  }
  void boolean(bool v) {
    sep();
    buf_ += v ? "true" : "false";
  }
  void string(const std::string& s) {
    sep();
    buf_ += '"';
    buf_ += json_escape(s);
    buf_ += '"';
  }
  void number_array(const std::vector<double>& v) {
    begin_array();
    for (double x : v) number(x);
    end_array();
  }
  void integer_array(const std::vector<std::int32_t>& v) {
    begin_array();
    for (std::int32_t x : v) integer(x);
    end_array();
  }
  void string_array(const std::vector<std::string>& v) {
    begin_array();
    for (const auto& s : v) string(s);
    end_array();
  }
  std::string take() { return std::move(buf_); }

 private:
  void sep() {
    if (!first_) buf_ += ',';
    first_ = false;
  }
  std::string buf_;
  bool first_ = true;
};

json parse_json(const std::string& text, const std::string& where) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(where + ": invalid JSON");
  }
  return j;
}

}  // namespace

std::string format_double(double x) {
  if (!std::isfinite(x)) {
    throw NumericError("cannot serialize non-finite value");
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

std::string sidecar_meta_path(const std::string& csv_path) {
  if (csv_path.size() > 4 && csv_path.ends_with(".csv")) {
    return csv_path.substr(0, csv_path.size() - 4) + ".meta.json";
  }
  return csv_path + ".meta.json";
}

MatrixData load_matrix_csv(const std::string& csv_path,
                           const std::optional<std::string>& meta_path) {
  const std::string text = read_file(csv_path);
  std::istringstream in(text);
  std::string line;
  std::int64_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError(csv_path + ": empty file");
  }
  ++line_no;
  line = strip_cr(line);
  if (line != "i,j,y") {
    throw ParseError(csv_path + ":1: expected header 'i,j,y', got '" + line + "'");
  }
  std::vector<Entry> entries;
  std::int64_t max_i = -1, max_j = -1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto parts = split(line, ',');
    const std::string where = csv_path + ":" + std::to_string(line_no);
    if (parts.size() != 3) {
      throw ParseError(where + ": expected 3 fields, got " +
                       std::to_string(parts.size()));
    }
    Entry e;
    e.row = static_cast<std::int32_t>(parse_int(parts[0], where));
    e.col = static_cast<std::int32_t>(parse_int(parts[1], where));
    const std::int64_t y = parse_int(parts[2], where);
    if (y != 0 && y != 1) {
      throw ParseError(where + ": y must be 0 or 1, got " + std::to_string(y));
    }
    e.value = static_cast<std::uint8_t>(y);
    if (e.row < 0 || e.col < 0) {
      throw ParseError(where + ": indices must be nonnegative");
    }
    max_i = std::max<std::int64_t>(max_i, e.row);
    max_j = std::max<std::int64_t>(max_j, e.col);
    entries.push_back(e);
  }
  if (entries.empty()) {
    throw ParseError(csv_path + ": no data rows");
  }

  std::int64_t n_rows = max_i + 1, n_cols = max_j + 1;
  Labels labels;
  const std::string meta = meta_path.value_or(sidecar_meta_path(csv_path));
  std::ifstream probe(meta);
  if (meta_path.has_value() && !probe.good()) {
    throw ParseError("cannot open meta file '" + meta + "'");
  }
  if (probe.good()) {
    const json j = parse_json(read_file(meta), meta);
    if (j.contains("n_rows")) n_rows = j["n_rows"].get<std::int64_t>();
    if (j.contains("n_cols")) n_cols = j["n_cols"].get<std::int64_t>();
    if (j.contains("row_labels")) {
      labels.rows = j["row_labels"].get<std::vector<std::string>>();
    }
    if (j.contains("col_labels")) {
      labels.cols = j["col_labels"].get<std::vector<std::string>>();
    }
    if (!labels.rows.empty() &&
        static_cast<std::int64_t>(labels.rows.size()) != n_rows) {
      throw ParseError(meta + ": row_labels length does not match n_rows");
    }
    if (!labels.cols.empty() &&
        static_cast<std::int64_t>(labels.cols.size()) != n_cols) {
      throw ParseError(meta + ": col_labels length does not match n_cols");
    }
    for (auto* v : {&labels.rows, &labels.cols}) {
      std::vector<std::string> sorted = *v;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ParseError(meta + ": labels must be unique");
      }
    }
  }
  return MatrixData{ObservedBinaryMatrix(n_rows, n_cols, std::move(entries)),
                    std::move(labels)};
}

void save_matrix_csv(const std::string& csv_path, const ObservedBinaryMatrix& matrix) {
  std::string out = "i,j,y\n";
  for (const Entry& e : matrix.entries()) {
    out += std::to_string(e.row);
    out += ',';
    out += std::to_string(e.col);
    out += ',';
    out += e.value ? '1' : '0';
    out += '\n';
  }
  write_file(csv_path, out);
}

void save_meta_json(const std::string& meta_path, std::int64_t n_rows,
                    std::int64_t n_cols, const Labels& labels) {
  JsonOut w;
  w.begin_object();
  if (!labels.cols.empty()) {
    w.key("col_labels");
    w.string_array(labels.cols);
  }
  w.key("n_cols");
  w.integer(n_cols);
  w.key("n_rows");
  w.integer(n_rows);
  if (!labels.rows.empty()) {
    w.key("row_labels");
    w.string_array(labels.rows);
  }
  w.end_object();
  write_file(meta_path, w.take() + "\n");
}

FitFile make_fit_file(const FitReport& report, const ObservedBinaryMatrix& data,
                      const Labels& labels) {
  FitFile f;
  f.n_rows = data.n_rows();
  f.n_cols = data.n_cols();
  f.n_observed = data.n_observed();
  f.theta = report.params.theta;
  f.beta = report.params.beta;
  const SigmaStats sig = sigma_stats(report.params, data);
  f.sigma_row = sig.row;
  f.sigma_col = sig.col;
  f.labels = labels;
  f.final_loglik = report.final_loglik;
  f.sweeps = report.sweeps;
  f.converged = report.converged;
  f.stop_reason = to_string(report.stop_reason);
  f.grad_max_norm = report.grad_max_norm;
  f.loglik_trace = report.loglik_trace;
  f.degenerate_rows = report.degenerate_rows;
  f.degenerate_cols = report.degenerate_cols;
  f.stats = data.design_stats();
  f.diagnostics = inference_diagnostics(f.stats, f.n_rows);
  return f;
}

std::string fit_file_json(const FitFile& f) {
  JsonOut w;
  w.begin_object();
  w.key("beta");
  w.number_array(f.beta);
  w.key("col_labels");
  w.string_array(f.labels.cols);
  w.key("converged");
  w.boolean(f.converged);
  w.key("degenerate_cols");
  w.integer_array(f.degenerate_cols);
  w.key("degenerate_rows");
  w.integer_array(f.degenerate_rows);
  w.key("design_stats");
  w.begin_object();
  w.key("j_star_max");
  w.integer(f.stats.j_star_max);
  w.key("j_star_min");
  w.integer(f.stats.j_star_min);
  w.key("missing_fraction");
  w.number(f.stats.missing_fraction);
  w.key("n_star_max");
  w.integer(f.stats.n_star_max);
  w.key("n_star_min");
  w.integer(f.stats.n_star_min);
  w.end_object();
  w.key("diagnostics");
  w.begin_object();
  w.key("jstar2_nstar_log2");
  w.number(f.diagnostics.jstar2_nstar_log2);
  w.key("log_n_over_jstar");
  w.number(f.diagnostics.log_n_over_jstar);
  w.end_object();
  w.key("final_loglik");
  w.number(f.final_loglik);
  w.key("grad_max_norm");
  w.number(f.grad_max_norm);
  w.key("loglik_trace");
  w.number_array(f.loglik_trace);
  w.key("n_cols");
  w.integer(f.n_cols);
  w.key("n_observed");
  w.integer(f.n_observed);
  w.key("n_rows");
  w.integer(f.n_rows);
  w.key("row_labels");
  w.string_array(f.labels.rows);
  w.key("sigma_col");
  w.number_array(f.sigma_col);
  w.key("sigma_row");
  w.number_array(f.sigma_row);
  w.key("stop_reason");
  w.string(f.stop_reason);
  w.key("sweeps");
  w.integer(f.sweeps);
  w.key("theta");
  w.number_array(f.theta);
  w.end_object();
  return w.take() + "\n";
}

void save_fit_json(const std::string& path, const FitFile& f) {
  write_file(path, fit_file_json(f));
}

FitFile load_fit_json(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  FitFile f;
  try {
    f.n_rows = j.at("n_rows").get<std::int64_t>();
    f.n_cols = j.at("n_cols").get<std::int64_t>();
    f.n_observed = j.at("n_observed").get<std::int64_t>();
    f.theta = j.at("theta").get<std::vector<double>>();
    f.beta = j.at("beta").get<std::vector<double>>();
    f.sigma_row = j.at("sigma_row").get<std::vector<double>>();
    f.sigma_col = j.at("sigma_col").get<std::vector<double>>();
    f.labels.rows = j.at("row_labels").get<std::vector<std::string>>();
    f.labels.cols = j.at("col_labels").get<std::vector<std::string>>();
    f.final_loglik = j.at("final_loglik").get<double>();
    f.sweeps = j.at("sweeps").get<std::int32_t>();
    f.converged = j.at("converged").get<bool>();
    f.stop_reason = j.at("stop_reason").get<std::string>();
    f.grad_max_norm = j.at("grad_max_norm").get<double>();
    f.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    f.degenerate_rows = j.at("degenerate_rows").get<std::vector<std::int32_t>>();
    f.degenerate_cols = j.at("degenerate_cols").get<std::vector<std::int32_t>>();
    const json& s = j.at("design_stats");
    f.stats.j_star_min = s.at("j_star_min").get<std::int64_t>();
    f.stats.j_star_max = s.at("j_star_max").get<std::int64_t>();
    f.stats.n_star_min = s.at("n_star_min").get<std::int64_t>();
    f.stats.n_star_max = s.at("n_star_max").get<std::int64_t>();
    f.stats.missing_fraction = s.at("missing_fraction").get<double>();
    const json& d = j.at("diagnostics");
    f.diagnostics.jstar2_nstar_log2 = d.at("jstar2_nstar_log2").get<double>();
    f.diagnostics.log_n_over_jstar = d.at("log_n_over_jstar").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (static_cast<std::int64_t>(f.theta.size()) != f.n_rows ||
      static_cast<std::int64_t>(f.beta.size()) != f.n_cols) {
    throw ParseError(path + ": parameter lengths disagree with dimensions");
  }
  return f;
}

namespace {

// Civil date to days since 1970-01-01 (Gregorian, proleptic).
std::int64_t days_from_civil(std::int64_t y, std::int64_t m, std::int64_t d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

std::int64_t parse_date(const std::string& s, const std::string& where) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    throw ParseError(where + ": expected YYYY-MM-DD date, got '" + s + "'");
  }
  const std::int64_t y = parse_int(s.substr(0, 4), where);
  const std::int64_t m = parse_int(s.substr(5, 2), where);
  const std::int64_t d = parse_int(s.substr(8, 2), where);
  if (m < 1 || m > 12 || d < 1 || d > 31) {
    throw ParseError(where + ": date out of range '" + s + "'");
  }
  return days_from_civil(y, m, d);
}

}  // namespace

RollCallPrep preprocess_rollcall(const std::string& csv_path, int min_service_days,
                                 const std::string& party_a,
                                 const std::string& party_b) {
  const std::string text = read_file(csv_path);
  std::istringstream in(text);
  std::string line;
  std::int64_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(csv_path + ": empty file");
  ++line_no;
  if (strip_cr(line) != "senator,party,bill,vote,date") {
    throw ParseError(csv_path + ":1: expected header 'senator,party,bill,vote,date'");
  }

  struct Vote {
    std::int32_t senator;
    std::int32_t bill;
    std::int8_t value;  // 1 = Yea, 0 = Nay, -1 = Absent
  };
  std::vector<std::string> senators, bills, parties;
  std::map<std::string, std::int32_t> senator_id, bill_id;
  std::vector<Vote> votes;
  std::vector<std::int64_t> first_day, last_day;
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> seen;

  bool saw_party_a = false, saw_party_b = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::string where = csv_path + ":" + std::to_string(line_no);
    const auto parts = split(line, ',');
    if (parts.size() != 5) {
      throw ParseError(where + ": expected 5 fields, got " +
                       std::to_string(parts.size()));
    }
    const std::string& name = parts[0];
    const std::string& party = parts[1];
    const std::string& bill = parts[2];
    const std::string& vote = parts[3];
    std::int8_t value;
    if (vote == "Yea") {
      value = 1;
    } else if (vote == "Nay") {
      value = 0;
    } else if (vote == "Absent") {
      value = -1;
    } else {
      throw ParseError(where + ": vote must be Yea, Nay or Absent, got '" + vote + "'");
    }
    const std::int64_t day = parse_date(parts[4], where);

    auto [sit, s_new] = senator_id.try_emplace(name, static_cast<std::int32_t>(senators.size()));
    if (s_new) {
      senators.push_back(name);
      parties.push_back(party);
      first_day.push_back(day);
      last_day.push_back(day);
    } else {
      if (parties[sit->second] != party) {
        throw ParseError(where + ": senator '" + name + "' listed with two parties");
      }
      first_day[sit->second] = std::min(first_day[sit->second], day);
      last_day[sit->second] = std::max(last_day[sit->second], day);
    }
    auto [bit, b_new] = bill_id.try_emplace(bill, static_cast<std::int32_t>(bills.size()));
    if (b_new) bills.push_back(bill);

    const auto key = std::make_pair(sit->second, bit->second);
    if (auto prev = seen.find(key); prev != seen.end()) {
      throw ParseError(where + ": duplicate (senator, bill) pair '" + name + "', '" +
                       bill + "' (first at line " + std::to_string(prev->second) + ")");
    }
    seen.emplace(key, line_no);
    votes.push_back(Vote{sit->second, bit->second, value});
    if (party == party_a) saw_party_a = true;
    if (party == party_b) saw_party_b = true;
  }
  if (!saw_party_a || !saw_party_b) {
    throw ParseError(csv_path + ": both parties ('" + party_a + "', '" + party_b +
                     "') must appear in the data");
  }

  RollCallPrep prep;

  // Step 1: drop senators whose service span is shorter than the threshold.
  const std::int64_t n_senators = static_cast<std::int64_t>(senators.size());
  std::vector<char> senator_kept(n_senators, 1);
  for (std::int64_t s = 0; s < n_senators; ++s) {
    const std::int64_t span = last_day[s] - first_day[s];
    if (span < min_service_days) {
      senator_kept[s] = 0;
      ++prep.senators_dropped_service;
      prep.audit.push_back("senator '" + senators[s] + "' dropped: service span " +
                           std::to_string(span) + " days < " +
                           std::to_string(min_service_days));
    }
  }

  // Step 2: drop bills with no observed votes, then bills whose observed
  // votes are all the same (an all-same bill would also tie the support
  // comparison below, so this must run before orientation).
  const std::int64_t n_bills = static_cast<std::int64_t>(bills.size());
  std::vector<char> bill_kept(n_bills, 1);
  {
    std::vector<std::int64_t> yeas(n_bills, 0), obs(n_bills, 0);
    for (const Vote& v : votes) {
      if (!senator_kept[v.senator] || v.value < 0) continue;
      ++obs[v.bill];
      yeas[v.bill] += v.value;
    }
    for (std::int64_t b = 0; b < n_bills; ++b) {
      if (obs[b] == 0) {
        bill_kept[b] = 0;
        ++prep.bills_dropped_empty;
        prep.audit.push_back("bill '" + bills[b] + "' dropped: no observed votes");
      } else if (yeas[b] == 0 || yeas[b] == obs[b]) {
        bill_kept[b] = 0;
        ++prep.bills_dropped_constant;
        prep.audit.push_back("bill '" + bills[b] +
                             "' dropped: all observed votes are the same");
      }
    }
  }

  // Step 3: orient each surviving bill by within-party support among voting
  // members; Y = 1 means voting with the leading party's side.
  std::vector<std::int64_t> yea_a(n_bills, 0), tot_a(n_bills, 0);
  std::vector<std::int64_t> yea_b(n_bills, 0), tot_b(n_bills, 0);
  for (const Vote& v : votes) {
    if (!senator_kept[v.senator] || !bill_kept[v.bill] || v.value < 0) continue;
    const std::string& party = parties[v.senator];
    if (party == party_a) {
      ++tot_a[v.bill];
      yea_a[v.bill] += v.value;
    } else if (party == party_b) {
      ++tot_b[v.bill];
      yea_b[v.bill] += v.value;
    }
  }
  // orientation: 1 -> Yea maps to Y=1 (party_a leaning), 0 -> Nay maps to Y=1.
  std::vector<char> orientation(n_bills, 1);
  for (std::int64_t b = 0; b < n_bills; ++b) {
    if (!bill_kept[b]) continue;
    if (tot_a[b] == 0 || tot_b[b] == 0) {
      bill_kept[b] = 0;
      ++prep.bills_dropped_unorientable;
      prep.audit.push_back("bill '" + bills[b] +
                           "' dropped: a party cast no votes, support undefined");
      continue;
    }
    // Compare yea_a/tot_a with yea_b/tot_b without division.
    const std::int64_t lhs = yea_a[b] * tot_b[b];
    const std::int64_t rhs = yea_b[b] * tot_a[b];
    if (lhs > rhs) {
      orientation[b] = 1;
    } else if (lhs < rhs) {
      orientation[b] = 0;
    } else {
      bill_kept[b] = 0;
      ++prep.bills_dropped_tie;
      prep.audit.push_back("bill '" + bills[b] +
                           "' dropped: equal within-party support, orientation undefined");
    }
  }

  // Step 4: drop senators left without any observed vote.
  std::vector<std::int64_t> senator_obs(n_senators, 0);
  for (const Vote& v : votes) {
    if (senator_kept[v.senator] && bill_kept[v.bill] && v.value >= 0) {
      ++senator_obs[v.senator];
    }
  }
  for (std::int64_t s = 0; s < n_senators; ++s) {
    if (senator_kept[s] && senator_obs[s] == 0) {
      senator_kept[s] = 0;
      ++prep.senators_dropped_empty;
      prep.audit.push_back("senator '" + senators[s] +
                           "' dropped: no observed votes after bill filtering");
    }
  }

  // Reindex survivors in first-appearance order.
  std::vector<std::int32_t> senator_new(n_senators, -1), bill_new(n_bills, -1);
  for (std::int64_t s = 0; s < n_senators; ++s) {
    if (senator_kept[s]) {
      senator_new[s] = static_cast<std::int32_t>(prep.labels.rows.size());
      prep.labels.rows.push_back(senators[s]);
    }
  }
  for (std::int64_t b = 0; b < n_bills; ++b) {
    if (bill_kept[b]) {
      bill_new[b] = static_cast<std::int32_t>(prep.labels.cols.size());
      prep.labels.cols.push_back(bills[b]);
    }
  }
  for (const Vote& v : votes) {
    if (!senator_kept[v.senator] || !bill_kept[v.bill] || v.value < 0) continue;
    const std::uint8_t y = orientation[v.bill]
                               ? static_cast<std::uint8_t>(v.value)
                               : static_cast<std::uint8_t>(1 - v.value);
    prep.entries.push_back(Entry{senator_new[v.senator], bill_new[v.bill], y});
  }
  prep.audit.push_back(
      "kept " + std::to_string(prep.labels.rows.size()) + " senators and " +
      std::to_string(prep.labels.cols.size()) + " bills (" +
      std::to_string(prep.entries.size()) + " observed votes); dropped " +
      std::to_string(prep.senators_dropped_service) + " senators by service, " +
      std::to_string(prep.bills_dropped_empty) + " bills empty, " +
      std::to_string(prep.bills_dropped_constant) + " bills constant, " +
      std::to_string(prep.bills_dropped_tie) + " bills by tie, " +
      std::to_string(prep.bills_dropped_unorientable) + " bills unorientable, " +
      std::to_string(prep.senators_dropped_empty) + " senators empty");
  return prep;
}

SimStudyConfig load_study_config(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  SimStudyConfig cfg;
  try {
    cfg.n_rows = j.at("n_rows").get<std::int64_t>();
    cfg.n_cols = j.at("n_cols").get<std::int64_t>();
    cfg.replications = j.at("replications").get<std::int32_t>();
    cfg.seed = j.value("seed", 0ull);
    cfg.level = j.value("level", 0.95);
    cfg.variance_targets_per_kind = j.value("variance_targets_per_kind", 100);
    cfg.m_target_sample = j.value("m_target_sample", std::int64_t{-1});
    cfg.threads = j.value("threads", 1);

    const json& d = j.at("design");
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "full") {
      cfg.design = make_full_design(cfg.n_rows, cfg.n_cols);
    } else if (kind == "block") {
      cfg.design = make_block_design(cfg.n_rows, cfg.n_cols);
    } else if (kind == "bernoulli") {
      cfg.design = make_bernoulli_design(cfg.n_rows, cfg.n_cols, d.at("rate").get<double>());
    } else if (kind == "explicit") {
      std::vector<std::pair<std::int32_t, std::int32_t>> cells;
      for (const auto& c : d.at("cells")) {
        cells.emplace_back(c.at(0).get<std::int32_t>(), c.at(1).get<std::int32_t>());
      }
      cfg.design = make_explicit_design(cfg.n_rows, cfg.n_cols, std::move(cells));
    } else {
      throw ParseError(path + ": unknown design kind '" + kind + "'");
    }

    if (j.contains("fit")) {
      const json& f = j.at("fit");
      if (f.contains("gamma") && !f.at("gamma").is_null()) {
        cfg.fit.learning_rate = f.at("gamma").get<double>();
      }
      if (f.contains("tol") && !f.at("tol").is_null()) {
        cfg.fit.tol = f.at("tol").get<double>();
      }
      cfg.fit.grad_tol = f.value("grad_tol", cfg.fit.grad_tol);
      cfg.fit.max_sweeps = f.value("max_sweeps", cfg.fit.max_sweeps);
      cfg.fit.init_half_width = f.value("init_half_width", cfg.fit.init_half_width);
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return cfg;
}

std::string inference_csv(const std::vector<InferenceRow>& rows) {
  std::string out = "form,estimate,se,ci_lower,ci_upper,z,p,log10_p,method\n";
  for (const auto& r : rows) {
    out += r.form;
    out += ',';
    out += format_double(r.result.estimate);
    out += ',';
    out += format_double(r.result.se);
    out += ',';
    out += format_double(r.result.ci_lower);
    out += ',';
    out += format_double(r.result.ci_upper);
    out += ',';
    out += format_double(r.result.z_stat);
    out += ',';
    out += format_double(r.result.p_value);
    out += ',';
    out += format_double(r.result.log10_p);
    out += ',';
    out += to_string(r.result.variance.method);
    out += '\n';
  }
  return out;
}

std::string ranking_csv(const FitFile& fit, std::int64_t top, bool descending) {
  std::vector<std::int64_t> order(fit.n_rows);
  std::iota(order.begin(), order.end(), 0);
  auto label = [&](std::int64_t i) {
    return fit.labels.rows.empty() ? std::to_string(i) : fit.labels.rows[i];
  };
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    if (fit.theta[a] != fit.theta[b]) {
      return descending ? fit.theta[a] > fit.theta[b] : fit.theta[a] < fit.theta[b];
    }
    return label(a) < label(b);  // deterministic tie-break by label
  });
  if (top > fit.n_rows) {
    log::warn("rank: top %lld exceeds row count %lld; clamping",
              static_cast<long long>(top), static_cast<long long>(fit.n_rows));
    top = fit.n_rows;
  }
  std::string out = "rank,label,estimate,se\n";
  for (std::int64_t r = 0; r < top; ++r) {
    const std::int64_t i = order[r];
    const double se = 1.0 / std::sqrt(fit.sigma_row[i]);
    out += std::to_string(r + 1);
    out += ',';
    out += label(i);
    out += ',';
    out += format_double(fit.theta[i]);
    out += ',';
    out += format_double(se);
    out += '\n';
  }
  return out;
}

void write_coverage_outputs(const std::string& prefix, const CoverageReport& report) {
  {
    std::string out = "kind,i,j,s2,sigma_bar2,sigma_tilde2\n";
    for (const auto& row : report.variance_table) {
      out += row.kind;
      out += ',';
      out += std::to_string(row.i);
      out += ',';
      out += std::to_string(row.j);
      out += ',';
      out += format_double(row.s2);
      out += ',';
      out += format_double(row.sigma_bar2);
      out += ',';
      out += format_double(row.sigma_tilde2);
      out += '\n';
    }
    write_file(prefix + "_variance_pairs.csv", out);
  }
  {
    std::string out = "target,bin_lo,bin_hi,count,normal_mean,normal_sd\n";
    struct Density {
      const char* name;
      const std::vector<double>* est;
      double mean;
      double var;
    };
    const Density targets[] = {
        {"m00", &report.est_m00,
         report.truth.theta.empty() ? 0.0 : report.truth.theta[0] - report.truth.beta[0],
         report.tilde_var_m00},
        {"theta0", &report.est_theta0,
         report.truth.theta.empty() ? 0.0 : report.truth.theta[0],
         report.tilde_var_theta0},
        {"beta0", &report.est_beta0,
         report.truth.beta.empty() ? 0.0 : report.truth.beta[0],
         report.tilde_var_beta0},
    };
    constexpr int kBins = 40;
    for (const Density& t : targets) {
      if (t.est->empty()) continue;
      const auto [mn_it, mx_it] = std::minmax_element(t.est->begin(), t.est->end());
      const double lo = *mn_it;
      const double width = std::max(*mx_it - lo, 1e-12) / kBins;
      std::vector<std::int64_t> counts(kBins, 0);
      for (double v : *t.est) {
        int b = static_cast<int>((v - lo) / width);
        if (b >= kBins) b = kBins - 1;
        ++counts[b];
      }
      for (int b = 0; b < kBins; ++b) {
        out += t.name;
        out += ',';
        out += format_double(lo + b * width);
        out += ',';
        out += format_double(lo + (b + 1) * width);
        out += ',';
        out += std::to_string(counts[b]);
        out += ',';
        out += format_double(t.mean);
        out += ',';
        out += format_double(std::sqrt(t.var));
        out += '\n';
      }
    }
    write_file(prefix + "_density_bins.csv", out);
  }
  {
    std::string out = "kind,i,j,coverage\n";
    for (std::size_t t = 0; t < report.coverage_m.size(); ++t) {
      out += "m,";
      out += std::to_string(report.m_targets[t].first);
      out += ',';
      out += std::to_string(report.m_targets[t].second);
      out += ',';
      out += format_double(report.coverage_m[t]);
      out += '\n';
    }
    for (std::size_t i = 0; i < report.coverage_theta.size(); ++i) {
      out += "theta,";
      out += std::to_string(i);
      out += ",0,";
      out += format_double(report.coverage_theta[i]);
      out += '\n';
    }
    for (std::size_t j = 0; j < report.coverage_beta.size(); ++j) {
      out += "beta,0,";
      out += std::to_string(j);
      out += ',';
      out += format_double(report.coverage_beta[j]);
      out += '\n';
    }
    write_file(prefix + "_coverage.csv", out);
  }
  {
    auto mean_of = [](const std::vector<double>& v) {
      if (v.empty()) return 0.0;
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    JsonOut w;
    w.begin_object();
    w.key("coverage_beta");
    w.number_array(report.coverage_beta);
    w.key("coverage_m");
    w.number_array(report.coverage_m);
    w.key("coverage_mean_beta");
    w.number(mean_of(report.coverage_beta));
    w.key("coverage_mean_m");
    w.number(mean_of(report.coverage_m));
    w.key("coverage_mean_theta");
    w.number(mean_of(report.coverage_theta));
    w.key("coverage_theta");
    w.number_array(report.coverage_theta);
    w.key("excluded");
    w.integer(report.excluded);
    w.key("level");
    w.number(report.level);
    w.key("mse_beta");
    w.number(report.mse_beta);
    w.key("mse_m");
    w.number(report.mse_m);
    w.key("mse_theta");
    w.number(report.mse_theta);
    w.key("replications_requested");
    w.integer(report.replications_requested);
    w.key("replications_used");
    w.integer(report.replications_used);
    w.end_object();
    write_file(prefix + "_summary.json", w.take() + "\n");
  }
}

LinearForm load_weights_json(const std::string& path, std::int64_t n_rows,
                             std::int64_t n_cols) {
  const json j = parse_json(read_file(path), path);
  try {
    if (j.contains("entries")) {
      std::vector<std::tuple<std::int32_t, std::int32_t, double>> weights;
      for (const auto& e : j.at("entries")) {
        weights.emplace_back(e.at(0).get<std::int32_t>(), e.at(1).get<std::int32_t>(),
                             e.at(2).get<double>());
      }
      return LinearForm::from_entry_weights(n_rows, n_cols, weights);
    }
    std::vector<double> wt(n_rows, 0.0), wb(n_cols, 0.0);
    if (j.contains("theta")) wt = j.at("theta").get<std::vector<double>>();
    if (j.contains("beta")) wb = j.at("beta").get<std::vector<double>>();
    if (static_cast<std::int64_t>(wt.size()) != n_rows ||
        static_cast<std::int64_t>(wb.size()) != n_cols) {
      throw ParseError(path + ": weight vector lengths do not match the fit dimensions");
    }
    return LinearForm::from_coefficients(std::move(wt), std::move(wb));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace bitmat::io
