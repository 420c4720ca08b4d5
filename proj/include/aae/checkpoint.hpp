#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aae/aae.hpp"
#include "aae/encoding.hpp"
#include "aae/error.hpp"

namespace aae {

// Layout, all integers little-endian:
//   8 bytes   magic "AAECKPT\0"
//   u32       format version
//   u64       manifest length L
//   L bytes   manifest JSON
//   u64       payload length P (number of doubles)
//   P * 8     IEEE-754 doubles, little-endian, in manifest order
//             (encoder, decoder, discriminator; per layer weights row-major
//             then bias)
inline constexpr char kCheckpointMagic[8] = {'A', 'A', 'E', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::size_t remaining() const { return bytes_.size() - at_; }

  std::uint64_t u(int width) {
    if (remaining() < static_cast<std::size_t>(width)) throw TruncatedPayloadError("checkpoint ends early");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[at_ + i])) << (8 * i);
    at_ += static_cast<std::size_t>(width);
    return v;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::string_view take(std::size_t n) {
    if (remaining() < n) throw TruncatedPayloadError("checkpoint ends early");
    auto s = bytes_.substr(at_, n);
    at_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t at_ = 0;
};

inline nlohmann::json network_manifest(const Mlp& net) {
  auto layers = nlohmann::json::array();
  for (const auto& l : net.layers)
    layers.push_back({{"fan_in", l.fan_in()},
                      {"fan_out", l.fan_out()},
                      {"activation", to_string(l.activation)},
                      {"slope", l.slope}});
  return layers;
}

inline Mlp network_from_manifest(const nlohmann::json& layers) {
  Mlp net;
  for (const auto& j : layers) {
    DenseLayer l;
    const auto fan_in = j.at("fan_in").get<Eigen::Index>();
    const auto fan_out = j.at("fan_out").get<Eigen::Index>();
    if (fan_in <= 0 || fan_out <= 0) throw CheckpointError("manifest lists an empty layer");
    l.weights = Matrix::Zero(fan_out, fan_in);
    l.bias = Vector::Zero(fan_out);
    l.activation = parse_activation(j.at("activation").get<std::string>());
    l.slope = j.at("slope").get<double>();
    net.layers.push_back(std::move(l));
  }
  return net;
}

}  // namespace detail

inline nlohmann::json checkpoint_manifest(const AaeModel& model) {
  nlohmann::json m;
  m["format_version"] = kCheckpointVersion;
  m["networks"] = {{"encoder", detail::network_manifest(model.encoder)},
                   {"decoder", detail::network_manifest(model.decoder)},
                   {"discriminator", detail::network_manifest(model.discriminator)}};
  auto centers = nlohmann::json::array();
  for (Eigen::Index t = 0; t < model.prior.centers.rows(); ++t) {
    auto c = nlohmann::json::array();
    for (Eigen::Index d = 0; d < model.prior.centers.cols(); ++d) c.push_back(model.prior.centers(t, d));
    centers.push_back(c);
  }
  m["prior"] = {{"tau", model.prior.tau()}, {"latent_dim", model.prior.latent_dim()}, {"centers", centers}};
  m["gamma"] = model.gamma;
  m["lrelu_slope"] = model.lrelu_slope;
  m["seed"] = model.seed;
  m["encoding_digest"] = digest_hex(model.encoding.digest());
  m["encoding"] = to_json(model.encoding);
  return m;
}

inline std::string serialize_checkpoint(const AaeModel& model) {
  model.validate();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_u32(out, kCheckpointVersion);
  const std::string manifest = checkpoint_manifest(model).dump();
  detail::put_u64(out, manifest.size());
  out += manifest;
  detail::put_u64(out, model.encoder.parameter_count() + model.decoder.parameter_count() +
                           model.discriminator.parameter_count());
  for (const Mlp* net : {&model.encoder, &model.decoder, &model.discriminator})
    for (const auto& l : net->layers) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) detail::put_f64(out, l.weights(r, c));
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) detail::put_f64(out, l.bias(r));
    }
  return out;
}

// Rejects: bad magic / unknown version, truncated or over-long payload, a
// manifest whose digest does not match its own encoding, and (when given) a
// digest other than `expected_digest`.
inline AaeModel deserialize_checkpoint(std::string_view bytes,
                                       std::optional<std::uint64_t> expected_digest = std::nullopt) {
  detail::Reader in(bytes);
  if (in.remaining() < sizeof(kCheckpointMagic) ||
      std::memcmp(in.take(sizeof(kCheckpointMagic)).data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CheckpointError("not a checkpoint file");
  const auto version = static_cast<std::uint32_t>(in.u(4));
  if (version != kCheckpointVersion)
    throw VersionMismatchError("checkpoint format version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  const std::uint64_t manifest_len = in.u(8);
  if (manifest_len > in.remaining()) throw TruncatedPayloadError("manifest length exceeds file size");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in.take(manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("unreadable manifest: ") + e.what());
  }

  AaeModel model;
  std::string recorded;
  try {
    if (manifest.at("format_version").get<std::uint32_t>() != kCheckpointVersion)
      throw VersionMismatchError("manifest format version differs from header");
    const auto& nets = manifest.at("networks");
    model.encoder = detail::network_from_manifest(nets.at("encoder"));
    model.decoder = detail::network_from_manifest(nets.at("decoder"));
    model.discriminator = detail::network_from_manifest(nets.at("discriminator"));
    const auto& prior = manifest.at("prior");
    const auto tau = prior.at("tau").get<Eigen::Index>();
    const auto dim = prior.at("latent_dim").get<Eigen::Index>();
    model.prior.centers = Matrix::Zero(tau, dim);
    for (Eigen::Index t = 0; t < tau; ++t)
      for (Eigen::Index d = 0; d < dim; ++d) model.prior.centers(t, d) = prior.at("centers").at(t).at(d).get<double>();
    model.gamma = manifest.at("gamma").get<double>();
    model.lrelu_slope = manifest.at("lrelu_slope").get<double>();
    model.seed = manifest.at("seed").get<std::uint64_t>();
    model.encoding = encoding_spec_from_json(manifest.at("encoding"));
    recorded = manifest.at("encoding_digest").get<std::string>();
    if (manifest.at("encoding").value("digest", recorded) != recorded)
      throw DigestMismatchError("manifest records two different encoding digests");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed manifest: ") + e.what());
  }

  const std::uint64_t actual = model.encoding.digest();
  if (recorded != digest_hex(actual))
    throw DigestMismatchError("manifest digest " + recorded + " does not match its encoding " + digest_hex(actual));
  if (expected_digest && *expected_digest != actual)
    throw DigestMismatchError("checkpoint encoding " + digest_hex(actual) + " differs from expected " +
                              digest_hex(*expected_digest));

  const std::uint64_t expected_count =
      model.encoder.parameter_count() + model.decoder.parameter_count() + model.discriminator.parameter_count();
  const std::uint64_t payload_len = in.u(8);
  if (payload_len != expected_count || in.remaining() != payload_len * 8)
    throw TruncatedPayloadError("payload holds " + std::to_string(in.remaining()) + " bytes, declares " +
                                std::to_string(payload_len) + " values, manifest needs " +
                                std::to_string(expected_count));
  for (Mlp* net : {&model.encoder, &model.decoder, &model.discriminator})
    for (auto& l : net->layers) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = in.f64();
      for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = in.f64();
    }
  try {
    model.validate();
  } catch (const Error& e) {
    throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return model;
}

inline void save_checkpoint(const AaeModel& model, const std::string& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline AaeModel load_checkpoint(const std::string& path, std::optional<std::uint64_t> expected_digest = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, expected_digest);
}

}  // namespace aae
