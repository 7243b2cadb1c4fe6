#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ivregime {

/// Binary treatment / instrument level.
enum class Arm : std::int8_t { Minus = -1, Plus = 1 };

constexpr int sign(Arm a) noexcept { return static_cast<int>(a); }
constexpr Arm opposite(Arm a) noexcept { return a == Arm::Plus ? Arm::Minus : Arm::Plus; }

/// Map from covariate cell to treatment.
class Regime {
 public:
  Regime() = default;
  explicit Regime(std::vector<Arm> arms) : arms_(std::move(arms)) {}

  static Regime constant(std::size_t cells, Arm arm) { return Regime(std::vector<Arm>(cells, arm)); }

  /// Regime whose cell l takes Plus iff bit l of `mask` is set.
  static Regime from_mask(std::size_t cells, std::uint64_t mask) {
    std::vector<Arm> arms(cells);
    for (std::size_t l = 0; l < cells; ++l) arms[l] = ((mask >> l) & 1U) ? Arm::Plus : Arm::Minus;
    return Regime(std::move(arms));
  }

  std::size_t size() const noexcept { return arms_.size(); }
  Arm operator[](std::size_t l) const { return arms_[l]; }
  Arm at(std::size_t l) const { return arms_.at(l); }
  const std::vector<Arm>& arms() const noexcept { return arms_; }

  std::vector<int> as_ints() const {
    std::vector<int> out;
    out.reserve(arms_.size());
    for (Arm a : arms_) out.push_back(sign(a));
    return out;
  }

  friend bool operator==(const Regime&, const Regime&) = default;

 private:
  std::vector<Arm> arms_;
};

/// Which criterion selects a regime.
enum class Objective { Id1, Id2, Oracle };

std::string_view to_string(Objective o) noexcept;
/// Parses "id1", "id2" or "oracle"; throws ValidationError otherwise.
Objective parse_objective(std::string_view s);

/// Default tolerance for sign and zero checks.
inline constexpr double kDefaultTolerance = 1e-9;

}  // namespace ivregime
