#include "pssp/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pssp/error.hpp"

namespace pssp {

char to_char(SsClass c) noexcept {
  switch (c) {
    case SsClass::H: return 'H';
    case SsClass::C: return 'C';
    case SsClass::E: return 'E';
  }
  return '?';
}

LabelMap LabelMap::standard() {
  LabelMap m;
  for (char c : std::string_view("HGI")) m.table_[c] = SsClass::H;
  for (char c : std::string_view("EBb")) m.table_[c] = SsClass::E;
  for (char c : std::string_view("TCS- ")) m.table_[c] = SsClass::C;
  return m;
}

LabelMap LabelMap::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("label map is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::MalformedInput, "label map must be a JSON object");
  LabelMap m;
  for (const auto& [key, value] : doc.items()) {
    if (key.size() != 1 || !value.is_string()) {
      throw Error(ErrorKind::MalformedInput, "label map entries must be single characters mapped to H, C or E");
    }
    const auto target = value.get<std::string>();
    if (target == "H") {
      m.table_[key[0]] = SsClass::H;
    } else if (target == "C") {
      m.table_[key[0]] = SsClass::C;
    } else if (target == "E") {
      m.table_[key[0]] = SsClass::E;
    } else {
      throw Error(ErrorKind::MalformedInput, "label map target '" + target + "' is not H, C or E");
    }
  }
  return m;
}

LabelMap LabelMap::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open label map " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

SsClass LabelMap::map(char raw) const {
  const auto it = table_.find(raw);
  if (it == table_.end()) {
    throw Error(ErrorKind::UnknownLabelChar, std::string("label character '") + raw + "' is not in the STRIDE alphabet");
  }
  return it->second;
}

bool LabelMap::contains(char raw) const noexcept { return table_.contains(raw); }

SsClass map_stride_label(char raw, const LabelMap& map) { return map.map(raw); }

bool is_accepted_residue(char c) noexcept {
  static constexpr std::string_view kAccepted = "ACDEFGHIKLMNPQRSTVWYBZXUO";
  return kAccepted.find(c) != std::string_view::npos;
}

namespace {

std::string where(std::size_t line, const std::string& id) {
  return "line " + std::to_string(line) + " (record '" + id + "')";
}

}  // namespace

std::vector<ProteinRecord> parse_records(std::istream& source, RecordFormat format, const LabelMap& map) {
  if (format != RecordFormat::Cb3) throw Error(ErrorKind::MalformedInput, "unsupported record format");

  std::vector<ProteinRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t header_line = 0;
  // 0: expecting header, 1: expecting residues, 2: expecting labels
  int state = 0;
  ProteinRecord current;

  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (state == 0) {
      if (line.front() != '>') {
        throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": expected '>' header line");
      }
      current = ProteinRecord{};
      current.id = line.substr(1);
      while (!current.id.empty() && std::isspace(static_cast<unsigned char>(current.id.back()))) current.id.pop_back();
      if (current.id.empty()) {
        throw Error(ErrorKind::MalformedRecord, "line " + std::to_string(line_no) + ": empty record identifier");
      }
      header_line = line_no;
      state = 1;
    } else if (state == 1) {
      if (line.front() == '>') {
        throw Error(ErrorKind::MalformedRecord, where(line_no, current.id) + ": missing residue and label lines");
      }
      current.residues.reserve(line.size());
      for (char raw : line) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
        if (!is_accepted_residue(c)) {
          throw Error(ErrorKind::MalformedRecord,
                      where(line_no, current.id) + ": residue character '" + std::string(1, raw) + "' is not accepted");
        }
        current.residues.push_back(c);
      }
      state = 2;
    } else {
      if (line.front() == '>') {
        throw Error(ErrorKind::MalformedRecord, where(line_no, current.id) + ": missing label line");
      }
      if (line.size() != current.residues.size()) {
        throw Error(ErrorKind::LengthMismatch, where(line_no, current.id) + ": " +
                                                   std::to_string(current.residues.size()) + " residues but " +
                                                   std::to_string(line.size()) + " labels");
      }
      current.labels.reserve(line.size());
      for (char raw : line) {
        if (!map.contains(raw)) {
          throw Error(ErrorKind::UnknownLabelChar,
                      where(line_no, current.id) + ": label character '" + std::string(1, raw) + "' has no mapping");
        }
        current.labels.push_back(map.map(raw));
      }
      records.push_back(std::move(current));
      state = 0;
    }
  }
  if (state != 0) {
    throw Error(ErrorKind::MalformedRecord, where(header_line, current.id) + ": record truncated at end of input");
  }
  return records;
}

std::vector<ProteinRecord> load_records(const std::filesystem::path& path, const LabelMap& map) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open dataset " + path.string());
  return parse_records(in, RecordFormat::Cb3, map);
}

void write_records(std::ostream& out, const std::vector<ProteinRecord>& records) {
  for (const auto& r : records) {
    out << '>' << r.id << '\n' << r.residues << '\n';
    for (auto c : r.labels) out << to_char(c);
    out << '\n';
  }
}

SsClass EdaReport::most_frequent_class() const noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (class_frequency[c] > class_frequency[best]) best = c;
  }
  return kAllClasses[best];
}

EdaReport compute_eda(const std::vector<ProteinRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no records to summarise");
  EdaReport eda;
  eda.record_count = records.size();
  for (const auto& r : records) {
    ++eda.length_histogram[r.size()];
    eda.residue_count += r.size();
    for (char c : r.residues) ++eda.residue_frequency[c];
    for (auto c : r.labels) ++eda.class_frequency[static_cast<std::size_t>(c)];
  }
  return eda;
}

namespace {

template <typename Map, typename KeyFn>
void write_counts(const std::filesystem::path& path, const Map& counts, KeyFn key_fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
  out << "key,count\n";
  for (const auto& [key, count] : counts) out << key_fn(key) << ',' << count << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

}  // namespace

void write_eda_csv(const EdaReport& eda, const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);
  write_counts(out_dir / "lengths.csv", eda.length_histogram, [](std::size_t k) { return std::to_string(k); });
  write_counts(out_dir / "residues.csv", eda.residue_frequency, [](char k) { return std::string(1, k); });
  std::map<int, std::size_t> classes;
  for (std::size_t c = 0; c < kNumClasses; ++c) classes[static_cast<int>(c)] = eda.class_frequency[c];
  write_counts(out_dir / "classes.csv", classes,
               [](int k) { return std::string(1, to_char(static_cast<SsClass>(k))); });
}

}  // namespace pssp
