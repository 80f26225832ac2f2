#include "poemlab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "poemlab/errors.hpp"

namespace poemlab {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& os, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(row[i]);
  }
  os << "\r\n";
}

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false, any = false;
  char c;
  auto end_row = [&] {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
    row.clear();
    field.clear();
    any = false;
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError("csv: unterminated quoted field");
  if (any || !field.empty()) end_row();
  return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_csv(in);
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_epoch_logs(const std::filesystem::path& path, const std::vector<EpochLog>& logs) {
  std::string text;
  for (const auto& log : logs) text += log.to_json() + "\n";
  write_text(path, text);
}

std::vector<EpochLog> read_epoch_logs(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<EpochLog> logs;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) logs.push_back(EpochLog::from_json(line));
  return logs;
}

void write_mined_jsonl(const std::filesystem::path& path, const std::vector<MinedSet>& mined) {
  std::string text;
  for (std::size_t e = 0; e < mined.size(); ++e) {
    nlohmann::ordered_json j;
    j["epoch"] = e + 1;
    j["indices"] = mined[e].indices();
    j["score_mean"] = mined[e].mean_score();
    j["score_min"] = mined[e].min_score();
    j["score_max"] = mined[e].max_score();
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

std::string queue_to_json(const FeatureQueue& queue) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["capacity"] = queue.capacity();
  j["dim"] = queue.dim();
  j["size"] = queue.size();
  j["features"] = queue.flat_features();
  j["targets"] = queue.targets();
  return j.dump();
}

FeatureQueue queue_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const Vec phi = j.at("features").get<Vec>();
    const Vec y = j.at("targets").get<Vec>();
    return FeatureQueue::from_flat(j.at("capacity").get<std::size_t>(), j.at("dim").get<std::size_t>(),
                                   phi, y);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("queue checkpoint: ") + e.what());
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& points,
                      const std::vector<int>* labels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  CsvRow header;
  for (std::size_t c = 0; c < points.cols(); ++c) header.push_back("x" + std::to_string(c));
  if (labels) header.push_back("label");
  write_csv_row(os, header);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    CsvRow row;
    for (double v : points.row(r)) row.push_back(format_number(v));
    if (labels) row.push_back(std::to_string((*labels)[r]));
    write_csv_row(os, row);
  }
}

Matrix read_matrix_csv(const std::filesystem::path& path, std::vector<int>* labels) {
  const auto rows = read_csv(path);
  if (rows.empty()) throw FormatError(path.string() + ": missing header");
  const bool has_label = !rows[0].empty() && rows[0].back() == "label";
  const std::size_t d = rows[0].size() - (has_label ? 1 : 0);
  Matrix out(0, d);
  Vec buf(d);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) throw FormatError(path.string() + ": ragged row");
    for (std::size_t c = 0; c < d; ++c) {
      const std::string& f = rows[r][c];
      auto res = std::from_chars(f.data(), f.data() + f.size(), buf[c]);
      if (res.ec != std::errc()) throw FormatError(path.string() + ": bad number '" + f + "'");
    }
    out.append_row(buf);
    if (has_label && labels) labels->push_back(std::stoi(rows[r].back()));
  }
  return out;
}

}  // namespace poemlab
