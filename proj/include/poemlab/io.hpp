#pragma once

// Artifact formats: RFC-4180 CSV, JSONL epoch logs, mined-set records and
// the feature-queue checkpoint.

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "poemlab/blr.hpp"
#include "poemlab/mining.hpp"
#include "poemlab/runner.hpp"

namespace poemlab {

using CsvRow = std::vector<std::string>;

// Quotes a field when it holds a comma, quote, CR or LF; quotes are doubled.
std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& os, const CsvRow& row);
// CRLF and LF line endings both accepted. Throws FormatError on an
// unterminated quoted field.
std::vector<CsvRow> parse_csv(std::istream& in);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

// Round-trip decimal form (shortest representation that parses back exactly).
std::string format_number(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

void write_epoch_logs(const std::filesystem::path& path, const std::vector<EpochLog>& logs);
std::vector<EpochLog> read_epoch_logs(const std::filesystem::path& path);

// One JSON line per epoch: epoch, indices (pool-relative), score stats.
void write_mined_jsonl(const std::filesystem::path& path, const std::vector<MinedSet>& mined);

std::string queue_to_json(const FeatureQueue& queue);
FeatureQueue queue_from_json(const std::string& text);

// Points in rows, x0..x{d-1} columns; a trailing integer column when
// labels are given.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& points,
                      const std::vector<int>* labels = nullptr);
Matrix read_matrix_csv(const std::filesystem::path& path, std::vector<int>* labels = nullptr);

}  // namespace poemlab
