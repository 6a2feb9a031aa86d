#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "nrc/network.hpp"

namespace nrc {

enum class Split { train, test };

// Images are flattened row-major 28x28 vectors with pixels in [0, 1].
struct Dataset {
  std::vector<Vector> images;
  std::vector<int> labels;
  Split split = Split::test;
  int rows = 28;
  int cols = 28;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  // First `count` examples (all of them when count is 0 or too large).
  Dataset head(std::size_t count) const;
};

// Reads {train,t10k}-{images-idx3,labels-idx1}-ubyte from `dir`, accepting a
// ".gz" suffix on any of them.
Dataset load_mnist(const std::string& dir, Split split);

// Raw IDX readers, exposed for tests and tooling.
std::vector<std::uint8_t> read_maybe_gzipped(const std::string& path);
Dataset parse_idx_pair(const std::vector<std::uint8_t>& images,
                       const std::vector<std::uint8_t>& labels, Split split);

// Model files: "NRCMODEL" magic, u32 version, u64 header length, JSON header,
// then every parameter as a little-endian IEEE-754 double in layer order
// (weights row-major, then bias).
inline constexpr std::uint32_t kModelFormatVersion = 1;
void save_model(const Network& net, const std::string& path);
Network load_model(const std::string& path);
std::vector<std::uint8_t> serialize_model(const Network& net);
Network deserialize_model(const std::vector<std::uint8_t>& bytes);

// Tabular output shared by every stage.
using Cell = std::variant<std::string, long long, double>;

struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

enum class ReportFormat { csv, json };

// CSV gets a header row and RFC-4180 quoting; JSON is an array of objects.
// Doubles are written with 17 significant digits. Writes are atomic.
void write_report(const ReportTable& table, const std::string& path, ReportFormat format);
std::string format_csv(const ReportTable& table);
std::string format_json(const ReportTable& table);

// Parses a CSV written by write_report (all cells come back as strings).
struct CsvDocument {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};
CsvDocument read_csv(const std::string& path);
CsvDocument parse_csv(const std::string& text);

// Writes via a sibling temp file and rename.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

std::string format_double(double value);

}  // namespace nrc
