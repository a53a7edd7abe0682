#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "odma/complexity.hpp"
#include "odma/config.hpp"
#include "odma/types.hpp"

namespace odma {

// Cyclic redundancy check over GF(2), MSB-first, zero initial register.
class Crc {
 public:
  Crc(std::uint32_t polynomial, int width) : poly_(polynomial), width_(width) {}

  int width() const { return width_; }
  // Remainder of bits(x) * x^width mod g(x).
  std::uint32_t remainder(std::span<const std::uint8_t> bits) const;
  Bits append(std::span<const std::uint8_t> payload) const;
  bool check(std::span<const std::uint8_t> bits_with_crc) const;

 private:
  std::uint32_t poly_;
  int width_;
};

// Polar code of length N = 2^n in natural (non bit-reversed) order:
// x = u * F^{(x)n}, F = [[1,0],[1,1]].
class PolarCode {
 public:
  PolarCode(int length, int info_bits, double design_snr_db);

  int length() const { return n_; }
  int info_bits() const { return k_; }
  // Ascending information positions.
  const std::vector<int>& info_set() const { return info_set_; }
  const std::vector<std::uint8_t>& frozen_mask() const { return frozen_; }
  // Information positions from least to most reliable.
  const std::vector<int>& reliability_order() const { return info_by_reliability_; }

  // Transform of a full length-N input vector u.
  Bits transform(const Bits& u) const;
  // info (K bits) placed on the information set in ascending order.
  Bits encode(std::span<const std::uint8_t> info) const;

  struct Candidate {
    Bits info;
    double metric;  // lower is better
  };
  // Successive-cancellation list decoding. LLR convention log p(0)/p(1).
  // Returns surviving paths sorted by metric.
  std::vector<Candidate> list_decode(std::span<const double> llrs, int list_size,
                                     ComplexityCounters* counters = nullptr) const;

 private:
  int n_;
  int k_;
  int stages_;
  std::vector<std::uint8_t> frozen_;
  std::vector<int> info_set_;
  std::vector<int> info_by_reliability_;
};

// Gaussian-approximation density evolution means for every synthetic
// channel, channel mean LLR 4*Es/N0.
std::vector<double> polar_ga_means(int length, double design_snr_db);

struct FecDecodeResult {
  Bits payload;
  Bits protected_bits;  // payload followed by its check bits
  double path_metric;
};

// Payload-in, codeword-out channel code. Decode returns nothing when no
// candidate passes the code's integrity check.
class FecCodec {
 public:
  virtual ~FecCodec() = default;
  virtual int payload_bits() const = 0;
  virtual int codeword_bits() const = 0;
  virtual Bits encode(std::span<const std::uint8_t> payload) const = 0;
  virtual std::optional<FecDecodeResult> decode(std::span<const double> llrs,
                                                ComplexityCounters* counters = nullptr) const = 0;
  // Integrity re-check of FecDecodeResult::protected_bits.
  virtual bool verify(std::span<const std::uint8_t> protected_bits) const = 0;
};

class PolarCrcCodec final : public FecCodec {
 public:
  PolarCrcCodec(int payload_bits, const FecConfig& cfg);

  int payload_bits() const override { return payload_bits_; }
  int codeword_bits() const override { return polar_.length(); }
  Bits encode(std::span<const std::uint8_t> payload) const override;
  std::optional<FecDecodeResult> decode(std::span<const double> llrs,
                                        ComplexityCounters* counters = nullptr) const override;
  bool verify(std::span<const std::uint8_t> protected_bits) const override;

  const Crc& crc() const { return crc_; }
  const PolarCode& polar() const { return polar_; }
  int list_size() const { return list_size_; }

 private:
  int payload_bits_;
  int list_size_;
  Crc crc_;
  PolarCode polar_;
};

std::unique_ptr<FecCodec> make_fec(const SystemConfig& config);

}  // namespace odma
