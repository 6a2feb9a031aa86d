#include "nrc/data_io.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "nrc/errors.hpp"

namespace nrc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;
constexpr char kModelMagic[8] = {'N', 'R', 'C', 'M', 'O', 'D', 'E', 'L'};

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  if (offset + 4 > bytes.size()) throw DataError("IDX file truncated in header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::string find_idx(const std::string& dir, const std::string& stem) {
  for (const std::string& candidate : {stem, stem + ".gz"}) {
    const fs::path p = fs::path(dir) / candidate;
    if (fs::exists(p)) return p.string();
  }
  // some mirrors ship "train-images.idx3-ubyte"
  std::string dotted = stem;
  if (auto dash = dotted.rfind("-idx"); dash != std::string::npos) {
    dotted[dash] = '.';
    for (const std::string& candidate : {dotted, dotted + ".gz"}) {
      const fs::path p = fs::path(dir) / candidate;
      if (fs::exists(p)) return p.string();
    }
  }
  throw DataError("missing MNIST file " + (fs::path(dir) / stem).string() + "[.gz]");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= std::uint64_t{in[offset + i]} << (8 * i);
  return v;
}

json architecture_to_json(const Architecture& arch) {
  json layers = json::array();
  for (const auto& spec : arch.layers) {
    if (spec.kind == LayerKind::dense)
      layers.push_back({{"kind", "dense"}, {"units", spec.units}});
    else
      layers.push_back({{"kind", "conv"},
                        {"kernels", spec.kernels},
                        {"kernel_size", spec.kernel_size},
                        {"stride", spec.stride}});
  }
  return {{"input",
           {{"channels", arch.input.channels},
            {"height", arch.input.height},
            {"width", arch.input.width}}},
          {"layers", layers}};
}

Architecture architecture_from_json(const json& j) {
  Architecture arch;
  arch.input.channels = j.at("input").at("channels").get<int>();
  arch.input.height = j.at("input").at("height").get<int>();
  arch.input.width = j.at("input").at("width").get<int>();
  for (const auto& layer : j.at("layers")) {
    const auto kind = layer.at("kind").get<std::string>();
    if (kind == "dense")
      arch.layers.push_back(LayerSpec::dense(layer.at("units").get<int>()));
    else if (kind == "conv")
      arch.layers.push_back(LayerSpec::conv(layer.at("kernels").get<int>(),
                                            layer.at("kernel_size").get<int>(),
                                            layer.at("stride").get<int>()));
    else
      throw DataError("unknown layer kind '" + kind + "' in model header");
  }
  return arch;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
  return format_double(std::get<double>(cell));
}

}  // namespace

Dataset Dataset::head(std::size_t count) const {
  if (count == 0 || count >= size()) return *this;
  Dataset out;
  out.split = split;
  out.rows = rows;
  out.cols = cols;
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(count));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

std::vector<std::uint8_t> read_maybe_gzipped(const std::string& path) {
  std::vector<std::uint8_t> raw = read_binary(path);
  if (raw.size() < 2 || raw[0] != 0x1f || raw[1] != 0x8b) return raw;

  gzFile file = gzopen(path.c_str(), "rb");
  if (!file) throw DataError("cannot open gzip stream " + path);
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buffer{};
  for (;;) {
    const int n = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()));
    if (n < 0) {
      gzclose(file);
      throw DataError("corrupt gzip stream " + path);
    }
    if (n == 0) break;
    out.insert(out.end(), buffer.begin(), buffer.begin() + n);
  }
  gzclose(file);
  return out;
}

Dataset parse_idx_pair(const std::vector<std::uint8_t>& images,
                       const std::vector<std::uint8_t>& labels, Split split) {
  if (read_be32(images, 0) != kImageMagic) throw DataError("bad magic number in IDX image file");
  if (read_be32(labels, 0) != kLabelMagic) throw DataError("bad magic number in IDX label file");
  const std::uint32_t count = read_be32(images, 4);
  const std::uint32_t rows = read_be32(images, 8);
  const std::uint32_t cols = read_be32(images, 12);
  const std::uint32_t label_count = read_be32(labels, 4);
  if (count != label_count)
    throw DataError("image count " + std::to_string(count) + " != label count " +
                    std::to_string(label_count));
  const std::size_t pixels = std::size_t{rows} * cols;
  if (images.size() != 16 + std::size_t{count} * pixels)
    throw DataError("IDX image payload length does not match its header");
  if (labels.size() != 8 + std::size_t{count})
    throw DataError("IDX label payload length does not match its header");

  Dataset ds;
  ds.split = split;
  ds.rows = static_cast<int>(rows);
  ds.cols = static_cast<int>(cols);
  ds.images.reserve(count);
  ds.labels.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    Vector img(static_cast<Eigen::Index>(pixels));
    const std::uint8_t* src = images.data() + 16 + std::size_t{n} * pixels;
    for (std::size_t p = 0; p < pixels; ++p) img[static_cast<Eigen::Index>(p)] = src[p] / 255.0;
    ds.images.push_back(std::move(img));
    const int label = labels[8 + n];
    if (label > 9) throw DataError("label " + std::to_string(label) + " outside 0..9");
    ds.labels.push_back(label);
  }
  return ds;
}

Dataset load_mnist(const std::string& dir, Split split) {
  const std::string prefix = split == Split::train ? "train" : "t10k";
  const auto images = read_maybe_gzipped(find_idx(dir, prefix + "-images-idx3-ubyte"));
  const auto labels = read_maybe_gzipped(find_idx(dir, prefix + "-labels-idx1-ubyte"));
  return parse_idx_pair(images, labels, split);
}

std::vector<std::uint8_t> serialize_model(const Network& net) {
  json header = {{"format", "nrc-model"},
                 {"version", kModelFormatVersion},
                 {"architecture", architecture_to_json(net.architecture())},
                 {"regime", net.info().regime},
                 {"seed", net.info().seed},
                 {"hyperparameters", net.info().hyperparameters},
                 {"parameter_count", net.parameter_count()}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, kModelFormatVersion);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + 8 * net.parameter_count());
  auto put_double = [&](double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); };
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) put_double(layer.weights(r, c));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_double(layer.bias[i]);
  }
  return out;
}

Network deserialize_model(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t fixed = sizeof(kModelMagic) + 4 + 8;
  if (bytes.size() < fixed || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0)
    throw DataError("not an nrc model file");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
  if (version != kModelFormatVersion)
    throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelFormatVersion) + ")");
  const std::uint64_t header_len = get_le(bytes, 12, 8);
  if (header_len > bytes.size() - fixed) throw DataError("model header truncated");

  json header;
  try {
    header = json::parse(bytes.begin() + fixed, bytes.begin() + fixed + static_cast<std::ptrdiff_t>(header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("model header is not valid JSON: ") + e.what());
  }
  if (header.value("version", 0u) != kModelFormatVersion) throw DataError("model header version mismatch");

  Network net;
  try {
    net = Network(architecture_from_json(header.at("architecture")));
    net.info().regime = header.at("regime").get<std::string>();
    net.info().seed = header.at("seed").get<std::uint64_t>();
    net.info().hyperparameters = header.at("hyperparameters").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model header: ") + e.what());
  }
  const std::size_t declared = header.value("parameter_count", std::size_t{0});
  if (declared != net.parameter_count())
    throw DataError("model header declares " + std::to_string(declared) +
                    " parameters but the architecture needs " + std::to_string(net.parameter_count()));

  const std::size_t payload_offset = fixed + header_len;
  const std::size_t payload = bytes.size() - payload_offset;
  if (payload < 8 * declared) throw DataError("model payload truncated");
  if (payload > 8 * declared) throw DataError("model payload longer than the architecture implies");

  std::size_t at = payload_offset;
  auto next = [&] {
    const double d = std::bit_cast<double>(get_le(bytes, at, 8));
    at += 8;
    return d;
  };
  for (auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = next();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = next();
  }
  return net;
}

void save_model(const Network& net, const std::string& path) {
  const auto bytes = serialize_model(net);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

Network load_model(const std::string& path) { return deserialize_model(read_binary(path)); }

void ReportTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw std::invalid_argument("report row has " + std::to_string(row.size()) + " cells, schema has " +
                                std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_csv(const ReportTable& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += csv_escape(table.columns[c]);
  }
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += csv_escape(cell_text(row[c]));
    }
    out += "\r\n";
  }
  return out;
}

std::string format_json(const ReportTable& table) {
  // ordered so keys keep the column order
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c)
      std::visit([&](const auto& v) { obj[table.columns[c]] = v; }, row[c]);
    rows.push_back(std::move(obj));
  }
  return rows.dump(2) + "\n";
}

void write_report(const ReportTable& table, const std::string& path, ReportFormat format) {
  for (const auto& row : table.rows)
    if (row.size() != table.columns.size()) throw std::invalid_argument("report rows do not share a schema");
  write_file_atomic(path, format == ReportFormat::csv ? format_csv(table) : format_json(table));
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("failed writing " + path);
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) throw DataError("cannot move " + temp.string() + " to " + path + ": " + ec.message());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t CsvDocument::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw DataError("CSV has no column '" + name + "'");
}

CsvDocument parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
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
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (field_started || !field.empty() || !record.empty()) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
      }
      record.clear();
      field.clear();
      field_started = false;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  CsvDocument doc;
  if (records.empty()) return doc;
  doc.columns = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != doc.columns.size())
      throw DataError("CSV row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(doc.columns.size()));
    doc.rows.push_back(std::move(records[r]));
  }
  return doc;
}

CsvDocument read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

}  // namespace nrc
