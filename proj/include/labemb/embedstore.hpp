#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labemb/embedding.hpp"

namespace labemb {

enum class SimilarityMeasure { Cosine };

/// u.v / (|u| |v|), clamped to [-1, 1]. Throws ZeroVector or DimensionMismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct Neighbor {
  std::string token;
  double similarity = 0.0;
};

/// The k most cosine-similar tokens, excluding the query itself. Ties are
/// broken lexicographically by token.
std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& model, std::string_view token,
                                        std::size_t k);

/// Text format: `<n> <dim>` then `<token> <v1> ... <vdim>` with %.6g values.
void write_model_text(std::ostream& out, const EmbeddingModel& model);
/// Parses the text format; FormatError carries the byte offset of the problem.
EmbeddingModel read_model_text(std::string_view text);

/// Writes `path` and the `path.meta` key=value sidecar.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
/// Sidecar is optional on load.
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace labemb
