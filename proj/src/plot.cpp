#include "labemb/plot.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <unordered_map>

#include "labemb/corpus.hpp"
#include "labemb/error.hpp"
#include "labemb/util.hpp"

namespace labemb {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#bcbd22", "#17becf", "#7f7f7f"};
constexpr const char* kOthersColor = "#c8c8c8";

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ClassTable ClassTable::load_csv(std::istream& in) {
  std::map<std::string, std::string> classes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (lineno == 1 && line == "loinc,class_label") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw MalformedRecord(lineno, "expected loinc,class_label");
    const auto code = trim(std::string_view(line).substr(0, comma));
    const auto label = trim(std::string_view(line).substr(comma + 1));
    if (code.empty() || label.empty()) throw MalformedRecord(lineno, "empty field");
    classes[std::string(code)] = std::string(label);
  }
  return ClassTable(std::move(classes));
}

std::string ClassTable::classify(std::string_view token) const {
  const auto it = classes_.find(std::string(token_stem(token)));
  return it == classes_.end() ? kOthersClass : it->second;
}

std::vector<std::string> legend_classes(std::span<const std::string> point_classes) {
  std::map<std::string, std::size_t> counts;
  for (const auto& c : point_classes) {
    if (c != kOthersClass) ++counts[c];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> legend;
  for (std::size_t i = 0; i < ranked.size() && i < kLegendClasses; ++i) legend.push_back(ranked[i].first);
  const bool others = std::any_of(point_classes.begin(), point_classes.end(), [&](const std::string& c) {
    return std::find(legend.begin(), legend.end(), c) == legend.end();
  });
  if (others) legend.emplace_back(kOthersClass);
  return legend;
}

void emit_plot(const RowMatrix& coords, std::span<const std::string> tokens, const ClassTable& classes,
               const std::filesystem::path& out_csv, const std::filesystem::path& out_svg,
               const std::map<std::string, std::string>& metadata) {
  if (coords.cols() != 2) throw DimensionMismatch("coordinates must have two columns");
  if (static_cast<std::size_t>(coords.rows()) != tokens.size()) throw DimensionMismatch("coords and tokens differ in length");

  std::vector<std::string> point_class;
  point_class.reserve(tokens.size());
  for (const auto& t : tokens) point_class.push_back(classes.classify(t));

  std::ostringstream csv;
  csv << "token,x,y,class\n";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    csv << csv_field(tokens[i]) << ',' << format_double(coords(r, 0)) << ',' << format_double(coords(r, 1)) << ','
        << csv_field(point_class[i]) << '\n';
  }
  write_file(out_csv, csv.str());

  const auto legend = legend_classes(point_class);
  std::unordered_map<std::string, std::string> color;
  for (std::size_t i = 0; i < legend.size(); ++i) {
    color[legend[i]] = legend[i] == kOthersClass ? kOthersColor : kPalette[i % std::size(kPalette)];
  }
  auto color_of = [&](const std::string& c) {
    const auto it = color.find(c);
    return it == color.end() ? std::string(kOthersColor) : it->second;
  };

  constexpr double kPlot = 600.0, kMargin = 20.0, kLegendWidth = 220.0;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (coords.rows() > 0) {
    xmin = coords.col(0).minCoeff();
    xmax = coords.col(0).maxCoeff();
    ymin = coords.col(1).minCoeff();
    ymax = coords.col(1).maxCoeff();
  }
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
  auto sx = [&](double v) { return kMargin + (v - xmin) / span * kPlot; };
  auto sy = [&](double v) { return kMargin + kPlot - (v - ymin) / span * kPlot; };

  std::ostringstream svg;
  const double width = kPlot + 2 * kMargin + kLegendWidth, height = kPlot + 2 * kMargin;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<desc>";
  for (const auto& [k, v] : metadata) svg << xml_escape(k) << '=' << xml_escape(v) << ';';
  svg << "</desc>\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g class=\"points\">\n";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    svg << "<circle class=\"point\" cx=\"" << format_g6(sx(coords(r, 0))) << "\" cy=\"" << format_g6(sy(coords(r, 1)))
        << "\" r=\"3\" fill=\"" << color_of(point_class[i]) << "\"><title>" << xml_escape(tokens[i]) << "</title></circle>\n";
  }
  svg << "</g>\n<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < legend.size(); ++i) {
    const double y = kMargin + 18.0 * static_cast<double>(i);
    const double x = kPlot + 2 * kMargin;
    svg << "<g class=\"legend-entry\"><rect x=\"" << x << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
        << color.at(legend[i]) << "\"/><text x=\"" << x + 16 << "\" y=\"" << y + 10 << "\">" << xml_escape(legend[i])
        << "</text></g>\n";
  }
  svg << "</g>\n</svg>\n";
  write_file(out_svg, svg.str());
}

}  // namespace labemb
