#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pssp {

/// Three-state secondary structure class. The numeric values are the class
/// indices used by the model output head and every report.
enum class SsClass : std::uint8_t { H = 0, C = 1, E = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<SsClass, kNumClasses> kAllClasses{SsClass::H, SsClass::C, SsClass::E};

char to_char(SsClass c) noexcept;
inline int index_of(SsClass c) noexcept { return static_cast<int>(c); }

struct ProteinRecord {
  std::string id;
  std::string residues;
  std::vector<SsClass> labels;

  std::size_t size() const noexcept { return residues.size(); }
  bool operator==(const ProteinRecord&) const = default;
};

/// Reduction table from the STRIDE alphabet to three states.
class LabelMap {
 public:
  /// H,G,I -> H; E,B,b -> E; T,C,S,'-',' ' -> C.
  static LabelMap standard();

  /// Loads a table from a JSON object {"<stride char>": "H"|"C"|"E", ...}.
  static LabelMap from_json(std::string_view text);
  static LabelMap from_file(const std::filesystem::path& path);

  /// Throws UnknownLabelChar when `raw` has no entry.
  SsClass map(char raw) const;
  bool contains(char raw) const noexcept;
  const std::map<char, SsClass>& table() const noexcept { return table_; }

 private:
  std::map<char, SsClass> table_;
};

SsClass map_stride_label(char raw, const LabelMap& map = LabelMap::standard());

enum class RecordFormat { Cb3 };

/// Parses records in the three-line "cb3" format:
///   >id
///   RESIDUES
///   STRIDE LABELS
/// Empty lines are skipped and CRLF endings are accepted. Residues are
/// upper-cased; the 20 canonical letters plus B, Z, X, U and O are accepted.
std::vector<ProteinRecord> parse_records(std::istream& source, RecordFormat format = RecordFormat::Cb3,
                                         const LabelMap& map = LabelMap::standard());
std::vector<ProteinRecord> load_records(const std::filesystem::path& path, const LabelMap& map = LabelMap::standard());

/// Inverse of parse_records for already-reduced labels.
void write_records(std::ostream& out, const std::vector<ProteinRecord>& records);

/// True for the residue letters accepted after normalisation.
bool is_accepted_residue(char c) noexcept;

struct EdaReport {
  std::map<std::size_t, std::size_t> length_histogram;
  std::map<char, std::size_t> residue_frequency;
  std::array<std::size_t, kNumClasses> class_frequency{};
  std::size_t record_count = 0;
  std::size_t residue_count = 0;

  /// Class with the highest count; ties go to the lower class index.
  SsClass most_frequent_class() const noexcept;
};

EdaReport compute_eda(const std::vector<ProteinRecord>& records);

/// Writes lengths.csv, residues.csv and classes.csv (columns key,count).
void write_eda_csv(const EdaReport& eda, const std::filesystem::path& out_dir);

}  // namespace pssp
