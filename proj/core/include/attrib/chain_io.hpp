#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "attrib/core.hpp"

namespace attrib {

inline constexpr const char* kChainHeader = "iter,chain,p,q,e,se,sp,par,paf";
inline constexpr const char* kChainHeaderWeighted = "iter,chain,p,q,e,se,sp,par,paf,weight";
inline constexpr const char* kSummaryHeader = "quantity,mean,ci_low,ci_high,ess,psrf,acc_rate";

/// 17 significant digits, so values round-trip exactly.
std::string format_double(double value);

/// One row per retained draw. `weight` is written only for weighted chains.
void write_chain_csv(std::ostream& out, const std::vector<ChainResult>& chains);

/// Reads a chain CSV written by write_chain_csv. Throws ParseError.
std::vector<ChainResult> read_chain_csv(std::istream& in);

struct SummaryRow {
  Quantity quantity;
  PosteriorSummary summary;
  /// Empty when no per-quantity acceptance rate applies.
  std::optional<double> acceptance_rate;
};

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
void write_summary_text(std::ostream& out, const std::vector<SummaryRow>& rows,
                        const std::vector<ChainResult>& chains);

/// Counts from a CSV with header `x11,x12,x21,x22` and one data row.
std::array<std::int64_t, 4> read_counts_csv(std::istream& in);

}  // namespace attrib
