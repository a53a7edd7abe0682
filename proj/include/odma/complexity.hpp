#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace odma {

enum class Stage : int { Activity = 0, AltMin, Somp, Detector, Pattern, Fec, Sic, Count };

std::string_view stage_name(Stage s);

// Complex-operation tallies per receiver stage. Counts are charged by each
// kernel from its operand shapes; merging is plain addition.
struct ComplexityCounters {
  static constexpr int kStages = static_cast<int>(Stage::Count);
  std::array<std::uint64_t, kStages> multiplies{};
  std::array<std::uint64_t, kStages> adds{};

  void charge(Stage s, std::uint64_t mul, std::uint64_t add) {
    multiplies[static_cast<int>(s)] += mul;
    adds[static_cast<int>(s)] += add;
  }
  // Dense (m x k) * (k x n) product.
  void charge_gemm(Stage s, std::uint64_t m, std::uint64_t k, std::uint64_t n) {
    charge(s, m * k * n, m * (k ? k - 1 : 0) * n);
  }
  std::uint64_t multiplies_at(Stage s) const { return multiplies[static_cast<int>(s)]; }
  std::uint64_t total_multiplies() const {
    std::uint64_t t = 0;
    for (auto v : multiplies) t += v;
    return t;
  }
  ComplexityCounters& operator+=(const ComplexityCounters& o) {
    for (int i = 0; i < kStages; ++i) {
      multiplies[i] += o.multiplies[i];
      adds[i] += o.adds[i];
    }
    return *this;
  }
};

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Activity: return "activity";
    case Stage::AltMin: return "altmin";
    case Stage::Somp: return "somp";
    case Stage::Detector: return "detector";
    case Stage::Pattern: return "pattern";
    case Stage::Fec: return "fec";
    case Stage::Sic: return "sic";
    default: return "?";
  }
}

}  // namespace odma
