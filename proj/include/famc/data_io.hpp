#pragma once

// File formats, dataset splitting and model serialization.
//
// Observation CSV: one "row,col,label" per line, 0-based indices, labels
// 1..p. MovieLens u.data: "user\titem\trating\ttimestamp" with 1-based ids.
//
// Model files (ASCII, LF, space separated, reals at 17 significant digits):
//
//   FAM v1 <rows> <cols> <classes> <lambda>
//   [sigma_hat <value>]          Gaussian models only
//   [levels <v_1> ... <v_p>]     Gaussian models only
//   then per parameter class (p-1 for logit models, one for Gaussian):
//   <atom count>
//   per atom: "<sigma>", then m1 reals (u), then m2 reals (v), one line each
//
// Truth files hold dense parameter matrices:
//
//   FAMTRUTH v1 <rows> <cols> <classes>
//   then per class, m1 lines of m2 reals.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "famc/core.hpp"
#include "famc/gaussian.hpp"

namespace famc {

enum class ObservationFormat { csv, movielens };

struct ShapeOverride {
  std::optional<int> rows;
  std::optional<int> cols;
  std::optional<int> classes;
};

ObservationSet read_observations(const std::filesystem::path& path, ObservationFormat format,
                                 const ShapeOverride& shape = {});
ObservationSet parse_observations(std::istream& in, ObservationFormat format,
                                  const ShapeOverride& shape = {});

void write_observations(const std::filesystem::path& path, const ObservationSet& obs);
void write_observations(std::ostream& out, const ObservationSet& obs);

/// Applies mapping to every label; labels absent from the mapping are kept.
/// The class count becomes the largest label present after mapping (at
/// least 2) unless classes is given.
ObservationSet remap_labels(const ObservationSet& obs, const std::map<int, int>& mapping,
                            std::optional<int> classes = std::nullopt);

/// Binary relabeling: target -> 1, every other label -> 2.
ObservationSet one_vs_rest(const ObservationSet& obs, int target);

struct SplitSpec {
  double test_fraction = 0.20;
  double validation_fraction_of_rest = 0.20;
  std::uint64_t seed = 0;
};

struct DataSplit {
  ObservationSet train;
  ObservationSet validation;
  ObservationSet test;
};

/// Seeded shuffle, then test = round(n * test_fraction) samples,
/// validation = round(rest * validation_fraction_of_rest), train = rest.
DataSplit split(const ObservationSet& obs, const SplitSpec& spec);

/// A model read back from disk with the lambda it was fitted with.
struct StoredModel {
  std::variant<AtomicModel, GaussianModel> model;
  double lambda = 0.0;
};

void write_model(std::ostream& out, const AtomicModel& model, double lambda);
void write_model(std::ostream& out, const GaussianModel& model);
void write_model(const std::filesystem::path& path, const AtomicModel& model, double lambda);
void write_model(const std::filesystem::path& path, const GaussianModel& model);

StoredModel parse_model(std::istream& in);
StoredModel read_model(const std::filesystem::path& path);

void write_truth(std::ostream& out, std::span<const Matrix> params);
void write_truth(const std::filesystem::path& path, std::span<const Matrix> params);
std::vector<Matrix> parse_truth(std::istream& in);
std::vector<Matrix> read_truth(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace famc
