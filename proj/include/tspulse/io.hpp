#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tspulse/adapt.hpp"
#include "tspulse/search.hpp"
#include "tspulse/series.hpp"

namespace tspulse {

/// Comma-separated text without quoting. The first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;

  /// ArgumentError when the column is absent.
  std::size_t column(std::string_view name) const;
};

/// IoError when unreadable; ParseError with the line number on ragged rows.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest text that reads back to the same double (up to 17 digits).
std::string format_double(double v);

/// Parses a numeric cell. Cells equal to `missing` yield nullopt; any other
/// non-numeric or non-finite cell is a ParseError naming line and column.
std::optional<double> parse_cell(std::string_view cell, const std::optional<std::string>& missing,
                                 std::size_t line, std::string_view column);

enum class CsvLayout { wide, long_format };
CsvLayout parse_layout(std::string_view name);

struct SeriesCsvOptions {
  CsvLayout layout = CsvLayout::wide;
  std::optional<std::string> missing;
  /// Wide layout: a column with this name is read as per-step labels rather
  /// than a channel. A column named "timestamp" is always skipped.
  std::optional<std::string> label_column;
};

struct SeriesCsv {
  Series series;
  std::vector<std::string> channel_names;
  std::vector<std::uint8_t> labels;  // empty without a label column
};

/// wide: one row per step, one column per channel.
/// long: rows of (timestamp, channel, value); steps are ordered by first
/// appearance of their timestamp and every (step, channel) cell not listed
/// is missing.
SeriesCsv read_series_csv(const std::string& path, const SeriesCsvOptions& opt = {});
/// Wide layout with a "timestamp" column of step indices; missing entries
/// are written as `missing`.
void write_series_csv(const std::string& path, const Series& x, const std::vector<std::string>& channel_names = {},
                      const std::string& missing = "NA");

/// One sample per row: "label" then C*S values ordered channel by channel
/// (c0_t0 ... c0_t{S-1}, c1_t0 ...). The value count must divide by C.
LabeledSet read_labeled_csv(const std::string& path, std::size_t channels,
                            const std::optional<std::string>& missing = std::nullopt);
void write_labeled_csv(const std::string& path, const LabeledSet& data);

/// One univariate window per row: id, family, fine, then the values.
std::vector<BenchmarkItem> read_corpus_csv(const std::string& path);
void write_corpus_csv(const std::string& path, const std::vector<BenchmarkItem>& items);

}  // namespace tspulse
