#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "tspulse/error.hpp"
#include "tspulse/io.hpp"

namespace tspulse {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = line.find(',', start);
    std::string cell = line.substr(start, p == std::string::npos ? std::string::npos : p - start);
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

void write_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
  os << '\n';
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ArgumentError("missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split_row(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " fields, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (in.bad()) throw IoError("read error on '" + path + "'");
  if (t.header.empty()) throw ParseError(path + ": empty file");
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream os = open_out(path);
  write_row(os, table.header);
  for (const auto& r : table.rows) write_row(os, r);
  if (!os) throw IoError("write to '" + path + "' failed");
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::optional<double> parse_cell(std::string_view cell, const std::optional<std::string>& missing, std::size_t line,
                                 std::string_view column) {
  if (missing && cell == *missing) return std::nullopt;
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const char* begin = cell.data();
  if (begin != end && *begin == '+') ++begin;
  const auto r = std::from_chars(begin, end, v);
  if (cell.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ", column '" + std::string(column) + "': '" +
                     std::string(cell) + "' is not a number" + (missing ? "" : " and no missing-value marker is set"));
  }
  return v;
}

CsvLayout parse_layout(std::string_view name) {
  if (name == "wide") return CsvLayout::wide;
  if (name == "long") return CsvLayout::long_format;
  throw ArgumentError("unknown CSV layout '" + std::string(name) + "' (wide or long)");
}

SeriesCsv read_series_csv(const std::string& path, const SeriesCsvOptions& opt) {
  const CsvTable t = read_csv(path);
  SeriesCsv out;
  if (opt.layout == CsvLayout::wide) {
    std::vector<std::size_t> cols;
    std::optional<std::size_t> label_col;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (t.header[j] == "timestamp") continue;
      if (opt.label_column && t.header[j] == *opt.label_column) {
        label_col = j;
        continue;
      }
      cols.push_back(j);
      out.channel_names.push_back(t.header[j]);
    }
    if (opt.label_column && !label_col) throw ParseError(path + ": no label column '" + *opt.label_column + "'");
    if (cols.empty()) throw ParseError(path + ": no value columns");
    if (t.rows.empty()) throw ParseError(path + ": no data rows");
    Series s(t.rows.size(), cols.size());
    s.observed.assign(s.values.size(), 1);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto v = parse_cell(t.rows[i][cols[c]], opt.missing, t.lines[i], t.header[cols[c]]);
        if (v) s.at(i, c) = *v;
        else {
          s.at(i, c) = std::nan("");
          s.observed[i * cols.size() + c] = 0;
        }
      }
      if (label_col) {
        const auto v = parse_cell(t.rows[i][*label_col], std::nullopt, t.lines[i], *opt.label_column);
        if (*v != 0.0 && *v != 1.0) throw ParseError(path + ":" + std::to_string(t.lines[i]) + ": labels must be 0 or 1");
        out.labels.push_back(static_cast<std::uint8_t>(*v));
      }
    }
    if (s.fully_observed()) s.observed.clear();
    out.series = std::move(s);
    return out;
  }
  const std::size_t ct = t.column("timestamp"), cc = t.column("channel"), cv = t.column("value");
  std::map<std::string, std::size_t> steps, chans;
  std::vector<std::tuple<std::size_t, std::size_t, std::optional<double>>> cells;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const auto [si, snew] = steps.try_emplace(r[ct], steps.size());
    const auto [ci, cnew] = chans.try_emplace(r[cc], chans.size());
    if (cnew) out.channel_names.push_back(r[cc]);
    cells.emplace_back(si->second, ci->second, parse_cell(r[cv], opt.missing, t.lines[i], "value"));
  }
  if (cells.empty()) throw ParseError(path + ": no data rows");
  Series s(steps.size(), chans.size(), std::nan(""));
  s.observed.assign(s.values.size(), 0);
  std::vector<std::uint8_t> seen(s.values.size(), 0);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& [st, ch, v] = cells[i];
    const std::size_t k = st * s.channels + ch;
    if (seen[k]) throw ParseError(path + ":" + std::to_string(t.lines[i]) + ": duplicate (timestamp, channel) entry");
    seen[k] = 1;
    if (v) {
      s.values[k] = *v;
      s.observed[k] = 1;
    }
  }
  if (s.fully_observed()) s.observed.clear();
  out.series = std::move(s);
  return out;
}

void write_series_csv(const std::string& path, const Series& x, const std::vector<std::string>& channel_names,
                      const std::string& missing) {
  CsvTable t;
  t.header.push_back("timestamp");
  for (std::size_t c = 0; c < x.channels; ++c)
    t.header.push_back(c < channel_names.size() ? channel_names[c] : "c" + std::to_string(c));
  for (std::size_t i = 0; i < x.length; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t c = 0; c < x.channels; ++c) row.push_back(x.is_observed(i, c) ? format_double(x.at(i, c)) : missing);
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

LabeledSet read_labeled_csv(const std::string& path, std::size_t channels, const std::optional<std::string>& missing) {
  if (channels == 0) throw ArgumentError("channel count must be positive");
  const CsvTable t = read_csv(path);
  const std::size_t lc = t.column("label");
  const std::size_t nvals = t.header.size() - 1;
  if (nvals == 0 || nvals % channels != 0) {
    throw ParseError(path + ": " + std::to_string(nvals) + " value columns do not split into " +
                     std::to_string(channels) + " channels");
  }
  const std::size_t S = nvals / channels;
  LabeledSet d;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const double lab = *parse_cell(r[lc], std::nullopt, t.lines[i], "label");
    if (lab < 0 || lab != std::floor(lab)) throw ParseError(path + ":" + std::to_string(t.lines[i]) + ": bad label");
    Series s(S, channels);
    s.observed.assign(s.values.size(), 1);
    std::size_t k = 0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j == lc) continue;
      const std::size_t c = k / S, tt = k % S;
      const auto v = parse_cell(r[j], missing, t.lines[i], t.header[j]);
      if (v) s.at(tt, c) = *v;
      else {
        s.at(tt, c) = std::nan("");
        s.observed[tt * channels + c] = 0;
      }
      ++k;
    }
    if (s.fully_observed()) s.observed.clear();
    d.series.push_back(std::move(s));
    d.labels.push_back(static_cast<std::size_t>(lab));
  }
  if (d.series.empty()) throw ParseError(path + ": no samples");
  return d;
}

void write_labeled_csv(const std::string& path, const LabeledSet& data) {
  if (data.series.empty()) throw ArgumentError("nothing to write");
  const std::size_t S = data.series[0].length, C = data.series[0].channels;
  CsvTable t;
  t.header.push_back("label");
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < S; ++i) t.header.push_back("c" + std::to_string(c) + "_t" + std::to_string(i));
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Series& s = data.series[n];
    if (s.length != S || s.channels != C) throw DimensionError("labeled samples must share one shape");
    std::vector<std::string> row{std::to_string(data.labels[n])};
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < S; ++i) row.push_back(s.is_observed(i, c) ? format_double(s.at(i, c)) : "NA");
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

std::vector<BenchmarkItem> read_corpus_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ci = t.column("id"), cf = t.column("family"), cn = t.column("fine");
  if (ci != 0 || cf != 1 || cn != 2 || t.header.size() < 4) {
    throw ParseError(path + ": corpus header must start with id,family,fine followed by values");
  }
  std::vector<BenchmarkItem> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    BenchmarkItem it;
    it.id = r[0];
    it.family = r[1];
    it.fine = r[2];
    it.x = Series(r.size() - 3, 1);
    for (std::size_t j = 3; j < r.size(); ++j) it.x.values[j - 3] = *parse_cell(r[j], std::nullopt, t.lines[i], t.header[j]);
    out.push_back(std::move(it));
  }
  return out;
}

void write_corpus_csv(const std::string& path, const std::vector<BenchmarkItem>& items) {
  std::ofstream os = open_out(path);
  const std::size_t L = items.empty() ? 0 : items[0].x.values.size();
  os << "id,family,fine";
  for (std::size_t i = 0; i < L; ++i) os << ",v" << i;
  os << '\n';
  for (const BenchmarkItem& it : items) {
    if (it.x.values.size() != L || it.x.channels != 1) throw DimensionError("corpus windows must be univariate and equally long");
    os << it.id << ',' << it.family << ',' << it.fine;
    for (double v : it.x.values) os << ',' << format_double(v);
    os << '\n';
  }
  if (!os) throw IoError("write to '" + path + "' failed");
}

}  // namespace tspulse
