#include "odma/fec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

namespace odma {

std::uint32_t Crc::remainder(std::span<const std::uint8_t> bits) const {
  const std::uint32_t mask = (width_ == 32) ? 0xFFFFFFFFu : ((1u << width_) - 1u);
  std::uint32_t reg = 0;
  for (auto b : bits) {
    const std::uint32_t feedback = ((reg >> (width_ - 1)) & 1u) ^ (b & 1u);
    reg = (reg << 1) & mask;
    if (feedback) reg ^= poly_;
  }
  return reg & mask;
}

Bits Crc::append(std::span<const std::uint8_t> payload) const {
  Bits out(payload.begin(), payload.end());
  const std::uint32_t r = remainder(payload);
  for (int i = width_ - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>((r >> i) & 1u));
  return out;
}

bool Crc::check(std::span<const std::uint8_t> bits_with_crc) const {
  if (static_cast<int>(bits_with_crc.size()) < width_) return false;
  return remainder(bits_with_crc) == 0;
}

namespace {

// Chung's approximation of the Gaussian-approximation phi function.
double ga_phi(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 10.0) return std::exp(-0.4527 * std::pow(x, 0.86) + 0.0218);
  return std::sqrt(std::numbers::pi / x) * std::exp(-x / 4.0) * (1.0 - 10.0 / (7.0 * x));
}

double ga_phi_inverse(double y) {
  if (y >= 1.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (ga_phi(hi) > y) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ga_phi(mid) > y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void ga_recurse(double mean, int length, std::vector<double>& out) {
  if (length == 1) {
    out.push_back(mean);
    return;
  }
  const double p = ga_phi(mean);
  const double check = ga_phi_inverse(p * (2.0 - p));  // 1 - (1 - phi)^2
  ga_recurse(check, length / 2, out);
  ga_recurse(2.0 * mean, length / 2, out);
}

}  // namespace

std::vector<double> polar_ga_means(int length, double design_snr_db) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(length));
  ga_recurse(4.0 * std::pow(10.0, design_snr_db / 10.0), length, out);
  return out;
}

PolarCode::PolarCode(int length, int info_bits, double design_snr_db) : n_(length), k_(info_bits), stages_(0) {
  if (length < 2 || (length & (length - 1)) != 0) throw ConfigError("polar length must be a power of two");
  if (info_bits <= 0 || info_bits > length) throw ConfigError("polar dimension out of range");
  while ((1 << stages_) < n_) ++stages_;

  const auto means = polar_ga_means(n_, design_snr_db);
  std::vector<int> order(n_);
  std::iota(order.begin(), order.end(), 0);
  // Most reliable first; ties by index for determinism.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return means[a] > means[b]; });
  frozen_.assign(n_, 1);
  for (int i = 0; i < k_; ++i) frozen_[order[i]] = 0;
  info_by_reliability_.assign(order.begin(), order.begin() + k_);
  std::reverse(info_by_reliability_.begin(), info_by_reliability_.end());
  for (int i = 0; i < n_; ++i)
    if (!frozen_[i]) info_set_.push_back(i);
}

Bits PolarCode::transform(const Bits& u) const {
  Bits x = u;
  for (int step = 1; step < n_; step *= 2)
    for (int base = 0; base < n_; base += 2 * step)
      for (int j = base; j < base + step; ++j) x[j] ^= x[j + step];
  return x;
}

Bits PolarCode::encode(std::span<const std::uint8_t> info) const {
  if (static_cast<int>(info.size()) != k_) throw ConfigError("polar info length mismatch");
  Bits u(n_, 0);
  for (int i = 0; i < k_; ++i) u[info_set_[i]] = info[i] & 1u;
  return transform(u);
}

namespace {

inline double boxplus(double a, double b) {
  const double s = (a < 0) != (b < 0) ? -1.0 : 1.0;
  const double m = std::min(std::abs(a), std::abs(b));
  return s * m + std::log1p(std::exp(-std::abs(a + b))) - std::log1p(std::exp(-std::abs(a - b)));
}

// log(1 + exp(-x)) without overflow.
inline double softplus_neg(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

// Per-path working memory for list SC decoding. For a node at depth d
// (size N >> d) the layout keeps its LLRs, the partial-sum codeword of its
// left child, and its own re-encoded output.
struct PathLayout {
  int n;
  int stages;
  std::vector<int> llr_off;   // depth -> offset, size N >> d
  std::vector<int> left_off;  // depth -> offset, size N >> (d + 1)
  std::vector<int> beta_off;  // depth -> offset, size N >> d
  int llr_size = 0;
  int bit_size = 0;

  PathLayout(int length, int st) : n(length), stages(st) {
    for (int d = 0; d <= stages; ++d) {
      llr_off.push_back(llr_size);
      llr_size += n >> d;
    }
    for (int d = 0; d <= stages; ++d) {
      left_off.push_back(bit_size);
      bit_size += d < stages ? (n >> (d + 1)) : 0;
      beta_off.push_back(bit_size);
      bit_size += n >> d;
    }
  }
};

class ListDecoder {
 public:
  ListDecoder(const PolarCode& code, std::span<const double> llrs, int list_size, ComplexityCounters* counters)
      : code_(code),
        layout_(code.length(), stages_of(code.length())),
        list_(list_size),
        counters_(counters) {
    llr_.assign(static_cast<std::size_t>(list_) * layout_.llr_size, 0.0);
    bits_.assign(static_cast<std::size_t>(list_) * layout_.bit_size, 0);
    info_.assign(static_cast<std::size_t>(list_) * code.info_bits(), 0);
    metric_.assign(list_, 0.0);
    active_.assign(list_, 0);
    active_[0] = 1;
    std::copy(llrs.begin(), llrs.end(), llr_.begin());
  }

  std::vector<PolarCode::Candidate> run() {
    node(0);
    std::vector<PolarCode::Candidate> out;
    for (int p = 0; p < list_; ++p) {
      if (!active_[p]) continue;
      const auto* inf = info_.data() + static_cast<std::size_t>(p) * code_.info_bits();
      out.push_back({Bits(inf, inf + code_.info_bits()), metric_[p]});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.metric < b.metric; });
    return out;
  }

 private:
  static int stages_of(int n) {
    int s = 0;
    while ((1 << s) < n) ++s;
    return s;
  }

  double* llr(int p, int d) { return llr_.data() + static_cast<std::size_t>(p) * layout_.llr_size + layout_.llr_off[d]; }
  std::uint8_t* left(int p, int d) {
    return bits_.data() + static_cast<std::size_t>(p) * layout_.bit_size + layout_.left_off[d];
  }
  std::uint8_t* beta(int p, int d) {
    return bits_.data() + static_cast<std::size_t>(p) * layout_.bit_size + layout_.beta_off[d];
  }

  void node(int d) {
    if (d == layout_.stages) {
      leaf();
      return;
    }
    const int half = layout_.n >> (d + 1);
    for (int p = 0; p < list_; ++p) {
      if (!active_[p]) continue;
      const double* a = llr(p, d);
      double* c = llr(p, d + 1);
      for (int i = 0; i < half; ++i) c[i] = boxplus(a[i], a[i + half]);
    }
    if (counters_) counters_->charge(Stage::Fec, 0, static_cast<std::uint64_t>(half) * count_active());
    node(d + 1);
    for (int p = 0; p < list_; ++p) {
      if (!active_[p]) continue;
      std::copy_n(beta(p, d + 1), half, left(p, d));
      const double* a = llr(p, d);
      const std::uint8_t* l = left(p, d);
      double* c = llr(p, d + 1);
      for (int i = 0; i < half; ++i) c[i] = a[i + half] + (l[i] ? -a[i] : a[i]);
    }
    if (counters_) counters_->charge(Stage::Fec, 0, static_cast<std::uint64_t>(half) * count_active());
    node(d + 1);
    for (int p = 0; p < list_; ++p) {
      if (!active_[p]) continue;
      const std::uint8_t* l = left(p, d);
      const std::uint8_t* r = beta(p, d + 1);
      std::uint8_t* b = beta(p, d);
      for (int i = 0; i < half; ++i) {
        b[i] = l[i] ^ r[i];
        b[i + half] = r[i];
      }
    }
  }

  int count_active() const { return static_cast<int>(std::count(active_.begin(), active_.end(), 1)); }

  void leaf() {
    const int pos = leaf_++;
    const int d = layout_.stages;
    if (code_.frozen_mask()[pos]) {
      for (int p = 0; p < list_; ++p) {
        if (!active_[p]) continue;
        metric_[p] += softplus_neg(llr(p, d)[0]);
        beta(p, d)[0] = 0;
      }
      return;
    }
    // Extended metrics for both decisions on every live path.
    std::vector<double> m0(list_), m1(list_);
    struct Cand {
      double metric;
      int path;
      std::uint8_t bit;
    };
    std::vector<Cand> cands;
    for (int p = 0; p < list_; ++p) {
      if (!active_[p]) continue;
      const double l = llr(p, d)[0];
      m0[p] = metric_[p] + softplus_neg(l);
      m1[p] = metric_[p] + softplus_neg(-l);
      cands.push_back({m0[p], p, 0});
      cands.push_back({m1[p], p, 1});
    }
    if (counters_) counters_->charge(Stage::Fec, 0, cands.size());
    const std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(list_));
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.metric < b.metric; });
    std::vector<int> survivors(list_, 0);  // bit 0 set: u=0 kept, bit 1 set: u=1 kept
    for (std::size_t i = 0; i < keep; ++i) survivors[cands[i].path] |= 1 << cands[i].bit;
    for (int p = 0; p < list_; ++p)
      if (survivors[p] == 0) active_[p] = 0;

    const int info_pos = info_count_++;
    for (int p = 0; p < list_; ++p) {
      if (survivors[p] == 0) continue;
      if (survivors[p] == 3) {
        const int q = free_slot();
        clone(p, q);
        set_bit(q, info_pos, 1, m1[p]);
        set_bit(p, info_pos, 0, m0[p]);
      } else {
        const std::uint8_t b = survivors[p] == 2 ? 1 : 0;
        set_bit(p, info_pos, b, b ? m1[p] : m0[p]);
      }
    }
  }

  int free_slot() {
    for (int q = 0; q < list_; ++q)
      if (!active_[q]) return q;
    return -1;  // survivors never exceed the list size
  }

  void clone(int from, int to) {
    std::copy_n(llr_.data() + static_cast<std::size_t>(from) * layout_.llr_size, layout_.llr_size,
                llr_.data() + static_cast<std::size_t>(to) * layout_.llr_size);
    std::copy_n(bits_.data() + static_cast<std::size_t>(from) * layout_.bit_size, layout_.bit_size,
                bits_.data() + static_cast<std::size_t>(to) * layout_.bit_size);
    std::copy_n(info_.data() + static_cast<std::size_t>(from) * code_.info_bits(), code_.info_bits(),
                info_.data() + static_cast<std::size_t>(to) * code_.info_bits());
  }

  void set_bit(int p, int info_pos, std::uint8_t b, double metric) {
    beta(p, layout_.stages)[0] = b;
    info_[static_cast<std::size_t>(p) * code_.info_bits() + info_pos] = b;
    metric_[p] = metric;
    active_[p] = 1;
  }

  const PolarCode& code_;
  PathLayout layout_;
  int list_;
  ComplexityCounters* counters_;
  std::vector<double> llr_;
  std::vector<std::uint8_t> bits_;
  std::vector<std::uint8_t> info_;
  std::vector<double> metric_;
  std::vector<std::uint8_t> active_;
  int leaf_ = 0;
  int info_count_ = 0;
};

}  // namespace

std::vector<PolarCode::Candidate> PolarCode::list_decode(std::span<const double> llrs, int list_size,
                                                         ComplexityCounters* counters) const {
  if (static_cast<int>(llrs.size()) != n_) throw ConfigError("LLR length does not match the polar length");
  if (list_size < 1) throw ConfigError("list size must be >= 1");
  return ListDecoder(*this, llrs, list_size, counters).run();
}

PolarCrcCodec::PolarCrcCodec(int payload_bits, const FecConfig& cfg)
    : payload_bits_(payload_bits),
      list_size_(cfg.list_size),
      crc_(cfg.crc_polynomial, cfg.crc_bits),
      polar_(cfg.codeword_bits, payload_bits + cfg.crc_bits, cfg.design_snr_db) {}

Bits PolarCrcCodec::encode(std::span<const std::uint8_t> payload) const {
  if (static_cast<int>(payload.size()) != payload_bits_) throw ConfigError("payload length mismatch");
  return polar_.encode(crc_.append(payload));
}

std::optional<FecDecodeResult> PolarCrcCodec::decode(std::span<const double> llrs,
                                                     ComplexityCounters* counters) const {
  for (const double l : llrs)
    if (!std::isfinite(l)) return std::nullopt;
  for (auto& c : polar_.list_decode(llrs, list_size_, counters)) {
    if (crc_.check(c.info)) {
      Bits payload(c.info.begin(), c.info.begin() + payload_bits_);
      return FecDecodeResult{std::move(payload), std::move(c.info), c.metric};
    }
  }
  return std::nullopt;
}

bool PolarCrcCodec::verify(std::span<const std::uint8_t> protected_bits) const {
  return static_cast<int>(protected_bits.size()) == payload_bits_ + crc_.width() && crc_.check(protected_bits);
}

std::unique_ptr<FecCodec> make_fec(const SystemConfig& config) {
  return std::make_unique<PolarCrcCodec>(config.payload_bits, config.fec);
}

}  // namespace odma
