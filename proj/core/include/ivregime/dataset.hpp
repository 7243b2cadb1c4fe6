#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ivregime/model.hpp"
#include "ivregime/types.hpp"

namespace ivregime {

struct ObservedRow {
  std::size_t cell = 0;
  Arm z = Arm::Minus;
  Arm a = Arm::Minus;
  double y = 0.0;

  friend bool operator==(const ObservedRow&, const ObservedRow&) = default;
};

/// Observed records (L, Z, A, Y): the only input estimators see.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DimensionError if a row's cell is not below `cell_count`,
  /// or ValidationError for a non-finite outcome.
  Dataset(std::vector<ObservedRow> rows, std::size_t cell_count);

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  std::size_t cell_count() const noexcept { return cell_count_; }
  const std::vector<ObservedRow>& rows() const noexcept { return rows_; }
  const ObservedRow& operator[](std::size_t i) const { return rows_[i]; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<ObservedRow> rows_;
  std::size_t cell_count_ = 0;
};

/// Draws n independent rows from the model. Row i uses its own SplitMix64
/// stream seeded with derive_seed(seed, i) and consumes five uniforms in the
/// order l, u, z, a, y, so the result is platform- and thread-independent.
/// Throws ValidationError when n == 0.
Dataset sample(const StructuralModel& model, std::size_t n, std::uint64_t seed);

/// Writes header `l,z,a,y` and one LF-terminated row per record. Outcomes are
/// printed in shortest round-trip form.
void write_csv(const Dataset& data, const std::filesystem::path& path);
void write_csv(const Dataset& data, std::ostream& out);

/// Parses the format written by write_csv. The cell count is
/// `cell_count` when given, else one past the largest cell id.
/// Throws ParseError (with line number), DomainError, or EmptyDatasetError.
Dataset read_csv(const std::filesystem::path& path, std::optional<std::size_t> cell_count = {});
Dataset read_csv(std::istream& in, std::optional<std::size_t> cell_count = {});

}  // namespace ivregime
