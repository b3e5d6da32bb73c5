#include "badacost/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "badacost/error.hpp"
#include "badacost/format.hpp"

namespace badacost {

using json = nlohmann::json;

namespace {

constexpr const char* kFormatName = "badacost-model";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  return in;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string checksum_of(const json& doc) {
  std::ostringstream out;
  out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a(doc.dump(1));
  return out.str();
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (double v : m.row(i)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

json tree_to_json(const CostTree& tree, int index) {
  const TreeNode& node = tree.nodes()[index];
  if (node.is_leaf()) return json{{"leaf", node.label}};
  return json{{"feature", node.feature},
              {"threshold", node.threshold},
              {"left", tree_to_json(tree, node.left)},
              {"right", tree_to_json(tree, node.right)}};
}

int tree_from_json(const json& j, std::vector<TreeNode>& nodes) {
  const int index = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes[index].label = j.at("leaf").get<int>();
    return index;
  }
  nodes[index].feature = j.at("feature").get<int>();
  nodes[index].threshold = j.at("threshold").get<double>();
  if (nodes[index].feature < 0) throw Error(ErrorKind::parse, "negative feature index in tree");
  const int left = tree_from_json(j.at("left"), nodes);
  const int right = tree_from_json(j.at("right"), nodes);
  nodes[index].left = left;
  nodes[index].right = right;
  return index;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv_table(std::istream& in) {
  CsvTable table;
  std::string line;
  while (std::getline(in, line) && blank(line)) {
  }
  if (blank(line)) throw Error(ErrorKind::parse, "CSV has no header line");
  table.header = split_cells(line);
  std::set<std::string> seen;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c].empty()) {
      throw Error(ErrorKind::parse, "empty column name in header at column " + std::to_string(c + 1));
    }
    if (!seen.insert(table.header[c]).second) {
      throw Error(ErrorKind::parse, "duplicate column name '" + table.header[c] + "'");
    }
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    ++row;
    const auto cells = split_cells(line);
    if (cells.size() != table.header.size()) {
      std::ostringstream msg;
      msg << "row " << row << " has " << cells.size() << " cells, expected "
          << table.header.size();
      throw Error(ErrorKind::parse, msg.str());
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        std::ostringstream msg;
        msg << "missing value at row " << row << ", column " << c + 1 << " ("
            << table.header[c] << ")";
        throw Error(ErrorKind::parse, msg.str());
      }
      const auto v = parse_number(cells[c]);
      if (!v) {
        std::ostringstream msg;
        msg << "non-numeric value '" << cells[c] << "' at row " << row << ", column " << c + 1
            << " (" << table.header[c] << ")";
        throw Error(ErrorKind::parse, msg.str());
      }
      values[c] = *v;
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

CsvTable read_csv_table(const std::string& path) {
  auto in = open_input(path);
  return read_csv_table(in);
}

Dataset table_to_dataset(const CsvTable& table, const std::string& label_column,
                         std::optional<int> k, std::vector<std::string>* warnings) {
  const auto label_pos = table.column(label_column);
  if (!label_pos) throw Error(ErrorKind::parse, "label column '" + label_column + "' not found");
  if (table.rows.empty()) throw Error(ErrorKind::empty_input, "CSV has no data rows");
  if (table.header.size() < 2) throw Error(ErrorKind::empty_input, "CSV has no feature columns");

  std::vector<std::string> names;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != *label_pos) names.push_back(table.header[c]);
  }
  Matrix features(table.rows.size(), names.size());
  std::vector<Label> labels(table.rows.size());
  int max_label = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double raw = table.rows[r][*label_pos];
    if (raw != std::floor(raw) || raw < 1.0 || raw > 1e6) {
      std::ostringstream msg;
      msg << "label " << format_double(raw) << " at row " << r + 1 << ", column " << *label_pos + 1
          << " must be a positive integer (labels are 1-based)";
      throw Error(ErrorKind::parse, msg.str());
    }
    labels[r] = static_cast<Label>(raw);
    max_label = std::max(max_label, labels[r]);
    std::size_t d = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c != *label_pos) features(r, d++) = table.rows[r][c];
    }
  }
  if (k && max_label > *k) {
    std::ostringstream msg;
    msg << "label " << max_label << " exceeds K = " << *k;
    throw Error(ErrorKind::parse, msg.str());
  }
  const int classes = k.value_or(std::max(max_label, 2));
  if (warnings != nullptr) {
    std::vector<bool> present(classes, false);
    for (Label l : labels) present[l - 1] = true;
    for (int c = 0; c < classes; ++c) {
      if (present[c]) continue;
      std::ostringstream msg;
      msg << "class " << c + 1 << " has no samples (K = " << classes
          << (k ? ")" : ", inferred from the largest label)");
      warnings->push_back(msg.str());
    }
  }
  return Dataset(std::move(features), std::move(labels), classes, std::move(names), label_column);
}

Dataset load_csv(const std::string& path, const std::string& label_column, std::optional<int> k,
                 std::vector<std::string>* warnings) {
  return table_to_dataset(read_csv_table(path), label_column, k, warnings);
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (const auto& name : data.feature_names()) out << name << ',';
  out << data.label_name() << '\n';
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (double v : data.row(n)) out << format_double(v) << ',';
    out << data.label(n) << '\n';
  }
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ostringstream out;
  write_csv(data, out);
  write_file(path, out.str());
}

CostMatrix read_cost_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (blank(line)) continue;
    std::vector<double> row;
    for (const auto& cell : split_cells(line)) {
      const auto v = parse_number(cell);
      if (!v) {
        std::ostringstream msg;
        msg << "non-numeric cost '" << cell << "' in row " << rows.size() + 1;
        throw Error(ErrorKind::parse, msg.str());
      }
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  for (const auto& row : rows) {
    if (row.size() != rows.size()) {
      throw Error(ErrorKind::parse, "cost matrix file must hold K rows of K values");
    }
  }
  return CostMatrix(Matrix::from_rows(rows));
}

CostMatrix read_cost_csv(const std::string& path) {
  auto in = open_input(path);
  return read_cost_csv(in);
}

std::string cost_csv(const CostMatrix& c) {
  std::ostringstream out;
  for (std::size_t i = 0; i < c.entries().rows(); ++i) {
    const auto row = c.entries().row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
    out << '\n';
  }
  return out.str();
}

std::string model_to_json(const Ensemble& e, const std::optional<CascadeThresholds>& t) {
  if (e.size() == 0) throw Error(ErrorKind::empty_input, "refusing to save a model with no members");
  json doc;
  doc["format"] = kFormatName;
  doc["version"] = kModelFormatVersion;
  doc["k"] = e.k();
  doc["n_features"] = e.n_features();
  doc["feature_names"] = e.feature_names();
  doc["cost"] = matrix_to_json(e.cost().entries());
  doc["shrinkage"] = e.shrinkage();
  json members = json::array();
  for (const Member& m : e.members()) {
    members.push_back(json{{"beta", m.beta}, {"tree", tree_to_json(m.tree, 0)},
                           {"depth_limit", m.tree.depth_limit()}});
  }
  doc["members"] = std::move(members);
  if (t) {
    validate_thresholds(*t, e.size());
    doc["thresholds"] =
        json{{"mode", to_string(t->mode)}, {"background", t->background}, {"values", t->values}};
  }
  doc["checksum"] = checksum_of(doc);
  return doc.dump(1) + "\n";
}

Model model_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::truncated, "model file is truncated or not valid JSON");
  }
  try {
    if (doc.value("format", std::string()) != kFormatName) {
      throw Error(ErrorKind::parse, "not a badacost model file");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::version_mismatch,
                  "model format version " + std::to_string(version) + ", expected " +
                      std::to_string(kModelFormatVersion));
    }
    if (!doc.contains("checksum")) throw Error(ErrorKind::checksum, "model has no checksum");
    const std::string stored = doc.at("checksum").get<std::string>();
    doc.erase("checksum");
    if (checksum_of(doc) != stored) {
      throw Error(ErrorKind::checksum, "model checksum does not match its contents");
    }

    std::vector<std::vector<double>> rows = doc.at("cost").get<std::vector<std::vector<double>>>();
    CostMatrix cost(Matrix::from_rows(rows));
    if (doc.at("k").get<int>() != cost.k()) {
      throw Error(ErrorKind::parse, "model K disagrees with its cost matrix");
    }
    Ensemble e(cost, doc.at("n_features").get<std::size_t>(), doc.at("shrinkage").get<double>(),
               doc.at("feature_names").get<std::vector<std::string>>());
    for (const json& m : doc.at("members")) {
      std::vector<TreeNode> nodes;
      tree_from_json(m.at("tree"), nodes);
      e.add(m.at("beta").get<double>(), CostTree(std::move(nodes), m.at("depth_limit").get<int>()));
    }
    if (e.size() == 0) throw Error(ErrorKind::parse, "model has no members");
    Model model{std::move(e), std::nullopt};
    if (doc.contains("thresholds")) {
      const json& t = doc.at("thresholds");
      CascadeThresholds thresholds;
      thresholds.mode = parse_threshold_mode(t.at("mode").get<std::string>());
      thresholds.background = t.at("background").get<int>();
      thresholds.values = t.at("values").get<std::vector<double>>();
      validate_thresholds(thresholds, model.ensemble.size());
      model.thresholds = std::move(thresholds);
    }
    return model;
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::parse, std::string("malformed model file: ") + ex.what());
  }
}

void save_model(const Ensemble& e, const std::optional<CascadeThresholds>& t,
                const std::string& path) {
  write_file(path, model_to_json(e, t));
}

Model load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string read_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(ErrorKind::io, "write to '" + path + "' failed");
}

}  // namespace badacost
