#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "labemb/embedding.hpp"

namespace labemb {

/// LOINC stem -> class label. Unmapped stems render as "Others".
class ClassTable {
 public:
  ClassTable() = default;
  explicit ClassTable(std::map<std::string, std::string> classes) : classes_(std::move(classes)) {}

  /// Reads `loinc,class_label` CSV. Throws MalformedRecord.
  static ClassTable load_csv(std::istream& in);

  /// Class of a token's stem, "Others" when absent.
  std::string classify(std::string_view token) const;
  bool empty() const { return classes_.empty(); }

 private:
  std::map<std::string, std::string> classes_;
};

inline constexpr const char* kOthersClass = "Others";
inline constexpr std::size_t kLegendClasses = 10;

/// Legend labels: the largest classes by point count (ties by name), then
/// "Others" if any point falls outside them.
std::vector<std::string> legend_classes(std::span<const std::string> point_classes);

/// Writes `token,x,y,class` CSV and a self-contained SVG scatter plot.
/// `metadata` is recorded in the SVG description. Throws IOError.
void emit_plot(const RowMatrix& coords, std::span<const std::string> tokens, const ClassTable& classes,
               const std::filesystem::path& out_csv, const std::filesystem::path& out_svg,
               const std::map<std::string, std::string>& metadata = {});

}  // namespace labemb
