#include "odma/encoder.hpp"

namespace odma {

Encoder::Encoder(const SystemConfig& config, const Codebooks& books, const FecCodec& fec)
    : layout_(MessageLayout::from(config)),
      pilot_length_(config.pilot_length),
      data_length_(config.data_length()),
      books_(books),
      fec_(fec) {
  if (books_.pilots.length() != pilot_length_ || books_.patterns.length() != data_length_)
    throw ConfigError("codebooks do not match the frame layout");
  if (fec_.codeword_bits() != books_.patterns.weight() * books_.modulation.bits_per_symbol)
    throw ConfigError("pattern weight does not match the coded symbol count");
}

std::vector<cplx> Encoder::modulate_payload(const Bits& payload) const {
  const Bits code = fec_.encode(payload);
  std::vector<cplx> symbols;
  symbols.reserve(code.size() / 2);
  for (std::size_t i = 0; i + 1 < code.size(); i += 2) symbols.push_back(books_.modulation.map(code[i], code[i + 1]));
  return symbols;
}

CVector Encoder::data_subframe(int pattern_index, const Bits& payload) const {
  const auto symbols = modulate_payload(payload);
  CVector data = CVector::Zero(data_length_);
  const auto* on = books_.patterns.on_slots(pattern_index);
  for (std::size_t s = 0; s < symbols.size(); ++s) data(on[s]) = symbols[s];
  return data;
}

EncodedFrame Encoder::encode(const Bits& message) const {
  if (static_cast<int>(message.size()) != layout_.total()) throw ConfigError("message length mismatch");
  EncodedFrame f;
  f.chunk_index = layout_.chunk_index(message);
  f.pilot_index = layout_.pilot_index(message);
  f.pattern_index = layout_.pattern_index(message);
  f.frame.resize(chunk_length());
  f.frame.head(pilot_length_) = books_.pilots.column(f.pilot_index);
  f.frame.tail(data_length_) = data_subframe(f.pattern_index, layout_.payload(message));
  return f;
}

ChunkScene build_chunk_scene(const std::vector<Bits>& messages, const CMatrix& h, const Encoder& encoder,
                             double noise_variance, Rng& noise_rng) {
  const auto k = static_cast<Eigen::Index>(messages.size());
  if (h.cols() != k) throw ConfigError("channel must have one column per message");
  ChunkScene scene;
  scene.h = h;
  scene.noise_variance = noise_variance;
  scene.messages = messages;
  scene.x.resize(k, encoder.chunk_length());
  int chunk = -1;
  for (Eigen::Index i = 0; i < k; ++i) {
    const EncodedFrame f = encoder.encode(messages[i]);
    if (chunk >= 0 && f.chunk_index != chunk) throw ConfigError("messages of one scene must share a chunk");
    chunk = f.chunk_index;
    scene.x.row(i) = f.frame.transpose();
    scene.pilot_indices.push_back(f.pilot_index);
    scene.pattern_indices.push_back(f.pattern_index);
  }
  scene.y = transmit(h, scene.x, noise_variance, noise_rng);
  return scene;
}

std::optional<Bits> decode_frame_exact(const CVector& frame, int chunk_index, const SystemConfig& config,
                                       const Codebooks& books, const PolarCrcCodec& fec) {
  const int tp = config.pilot_length;
  const int tc = config.data_length();
  if (frame.size() != tp + tc) return std::nullopt;

  Eigen::Index pilot = 0;
  const CVector corr = books.pilots.matrix().adjoint() * frame.head(tp);
  corr.cwiseAbs().maxCoeff(&pilot);
  if ((books.pilots.column(pilot) - frame.head(tp)).norm() > 1e-9 * std::sqrt(books.energy.pilot_energy))
    return std::nullopt;

  std::vector<std::uint16_t> on;
  for (int t = 0; t < tc; ++t)
    if (std::abs(frame(tp + t)) > 0.0) on.push_back(static_cast<std::uint16_t>(t));
  if (static_cast<int>(on.size()) != books.patterns.weight()) return std::nullopt;
  int pattern = -1;
  for (int c = 0; c < books.patterns.size() && pattern < 0; ++c)
    if (std::equal(on.begin(), on.end(), books.patterns.on_slots(c))) pattern = c;
  if (pattern < 0) return std::nullopt;

  Bits code;
  for (auto t : on) {
    const cplx s = frame(tp + t);
    code.push_back(s.real() < 0 ? 1 : 0);
    code.push_back(s.imag() < 0 ? 1 : 0);
  }
  // The polar transform is an involution over GF(2).
  const Bits u = fec.polar().transform(code);
  Bits info;
  for (int i : fec.polar().info_set()) info.push_back(u[i]);
  if (!fec.crc().check(info)) return std::nullopt;
  Bits payload(info.begin(), info.begin() + fec.payload_bits());
  return MessageLayout::from(config).assemble(chunk_index, static_cast<int>(pilot), pattern, payload);
}

}  // namespace odma
