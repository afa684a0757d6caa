#include "attrib/chain_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

#include "attrib/errors.hpp"

namespace attrib {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

double parse_double(const std::string& s, std::size_t line_no) {
  if (s == "NA") return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') {
    throw ParseError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') {
    throw ParseError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_chain_csv(std::ostream& out, const std::vector<ChainResult>& chains) {
  bool weighted = false;
  for (const auto& c : chains) weighted = weighted || c.weighted();
  out << (weighted ? kChainHeaderWeighted : kChainHeader) << '\n';
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const auto& chain = chains[k];
    for (std::size_t i = 0; i < chain.draws.size(); ++i) {
      const Draw& d = chain.draws[i];
      out << (i + 1) << ',' << k << ',' << format_double(d.p) << ',' << format_double(d.q) << ','
          << format_double(d.e) << ',' << format_double(d.se) << ',' << format_double(d.sp) << ','
          << format_double(d.par) << ',' << format_double(d.paf);
      if (weighted) {
        out << ',' << (chain.weights ? format_double((*chain.weights)[i]) : std::string("1"));
      }
      out << '\n';
    }
  }
}

std::vector<ChainResult> read_chain_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("chain CSV is empty");
  line = strip_cr(line);
  bool weighted = false;
  if (line == kChainHeaderWeighted) {
    weighted = true;
  } else if (line != kChainHeader) {
    throw ParseError("line 1: unexpected chain CSV header");
  }
  const std::size_t ncol = weighted ? 10 : 9;

  std::vector<ChainResult> chains;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != ncol) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(ncol) +
                       " fields");
    }
    const auto k = parse_int(f[1], line_no);
    if (k < 0) throw ParseError("line " + std::to_string(line_no) + ": negative chain index");
    if (static_cast<std::size_t>(k) >= chains.size()) chains.resize(static_cast<std::size_t>(k) + 1);
    auto& chain = chains[static_cast<std::size_t>(k)];
    Draw d;
    d.p = parse_double(f[2], line_no);
    d.q = parse_double(f[3], line_no);
    d.e = parse_double(f[4], line_no);
    d.se = parse_double(f[5], line_no);
    d.sp = parse_double(f[6], line_no);
    d.par = parse_double(f[7], line_no);
    d.paf = parse_double(f[8], line_no);
    chain.draws.push_back(d);
    if (weighted) {
      if (!chain.weights) chain.weights.emplace();
      chain.weights->push_back(parse_double(f[9], line_no));
    }
  }
  for (std::size_t k = 0; k < chains.size(); ++k) chains[k].meta.chain_index = static_cast<int>(k);
  return chains;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.quantity) << ',' << format_double(r.summary.mean) << ','
        << format_double(r.summary.ci_low) << ',' << format_double(r.summary.ci_high) << ','
        << format_double(r.summary.ess) << ',' << optional_field(r.summary.psrf) << ','
        << optional_field(r.acceptance_rate) << '\n';
  }
}

void write_summary_text(std::ostream& out, const std::vector<SummaryRow>& rows,
                        const std::vector<ChainResult>& chains) {
  char buf[256];
  if (!chains.empty()) {
    const auto& meta = chains.front().meta;
    std::snprintf(buf, sizeof buf, "sampler %s, %zu chain(s), %lld iterations, burn-in %lld\n",
                  meta.sampler.c_str(), chains.size(), static_cast<long long>(meta.iterations),
                  static_cast<long long>(meta.burn_in));
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-9s %12s %12s %12s %10s %8s %8s\n", "quantity", "mean",
                "2.5%", "97.5%", "ESS", "PSRF", "acc%");
  out << buf;
  for (const auto& r : rows) {
    std::string psrf = r.summary.psrf ? std::to_string(*r.summary.psrf).substr(0, 6) : "-";
    std::string acc = r.acceptance_rate ? std::to_string(100.0 * *r.acceptance_rate).substr(0, 5)
                                        : "-";
    std::snprintf(buf, sizeof buf, "%-9s %12.6g %12.6g %12.6g %10.1f %8s %8s\n",
                  to_string(r.quantity).c_str(), r.summary.mean, r.summary.ci_low,
                  r.summary.ci_high, r.summary.ess, psrf.c_str(), acc.c_str());
    out << buf;
  }
  for (std::size_t k = 0; k < chains.size(); ++k) {
    std::snprintf(buf, sizeof buf, "chain %zu: %zu draws, %.3f s\n", k, chains[k].draws.size(),
                  chains[k].elapsed_seconds);
    out << buf;
  }
}

std::array<std::int64_t, 4> read_counts_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "x11,x12,x21,x22") {
    throw ParseError("line 1: counts CSV header must be x11,x12,x21,x22");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw ParseError("line " + std::to_string(line_no) + ": expected 4 counts");
    std::array<std::int64_t, 4> x{};
    for (std::size_t i = 0; i < 4; ++i) x[i] = parse_int(f[i], line_no);
    return x;
  }
  throw ParseError("counts CSV has no data row");
}

}  // namespace attrib
