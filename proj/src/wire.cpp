#include "spnp/wire.hpp"

#include "spnp/errors.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstring>

namespace spnp {

namespace {

std::string domain_string(ValueDomain d) { return d == ValueDomain::Unit ? "[0,1]" : "[-1,1]"; }

ValueDomain domain_from_string(const std::string& s) {
  if (s == "[0,1]") return ValueDomain::Unit;
  if (s == "[-1,1]") return ValueDomain::Symmetric;
  throw ProtocolError("unknown value domain '" + s + "'");
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

}  // namespace

nlohmann::json ServedModelInfo::to_json() const {
  nlohmann::json j{{"proto", kProtocolVersion},
                   {"convention", std::string(to_string(convention))},
                   {"T", T},
                   {"value_domain", domain_string(value_domain)},
                   {"output_kind", output_kind},
                   {"layout", layout},
                   {"t_policy", t_policy}};
  if (schedule) j["schedule"] = schedule->to_json();
  return j;
}

ServedModelInfo ServedModelInfo::from_json(const nlohmann::json& j) {
  try {
    if (j.at("proto").get<int>() != kProtocolVersion) {
      throw ProtocolError(fmt::format("server speaks protocol {}, client {}", j.at("proto").get<int>(), kProtocolVersion));
    }
    ServedModelInfo info;
    info.convention = convention_from_string(j.at("convention").get<std::string>());
    info.T = j.at("T").get<int>();
    info.value_domain = domain_from_string(j.at("value_domain").get<std::string>());
    info.output_kind = j.value("output_kind", "score");
    info.layout = j.value("layout", info.layout);
    info.t_policy = j.value("t_policy", info.t_policy);
    if (j.contains("schedule")) info.schedule = NoiseSchedule::from_json(j.at("schedule"));
    if (info.schedule && info.schedule->T() != info.T) throw ProtocolError("schedule length differs from T in /info");
    return info;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed /info: ") + e.what());
  } catch (const ConfigError& e) {
    throw ProtocolError(std::string("malformed /info: ") + e.what());
  }
}

std::size_t shape_elements(const std::vector<std::int64_t>& shape) {
  if (shape.size() != 4) throw ProtocolError(fmt::format("shape must have 4 entries (NCHW), got {}", shape.size()));
  std::size_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ProtocolError("shape entries must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string encode_tensor_message(const nlohmann::json& header, const std::vector<float>& data) {
  std::string out = header.dump();
  out.push_back('\n');
  const std::size_t off = out.size();
  out.resize(off + 4 * data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(data[i]));
    std::memcpy(out.data() + off + 4 * i, &bits, 4);
  }
  return out;
}

TensorMessage decode_tensor_message(std::string_view body) {
  const auto nl = body.find('\n');
  if (nl == std::string_view::npos) throw ProtocolError("message lacks the header newline");
  TensorMessage msg;
  try {
    msg.header = nlohmann::json::parse(body.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("bad message header: ") + e.what());
  }
  if (!msg.header.is_object() || !msg.header.contains("shape") || !msg.header["shape"].is_array()) {
    throw ProtocolError("message header lacks a shape array");
  }
  std::vector<std::int64_t> shape;
  try {
    shape = msg.header["shape"].get<std::vector<std::int64_t>>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("shape entries must be integers");
  }
  const std::size_t n = shape_elements(shape);
  const std::string_view payload = body.substr(nl + 1);
  if (payload.size() != 4 * n) {
    throw ProtocolError(fmt::format("payload has {} bytes, shape needs {}", payload.size(), 4 * n));
  }
  msg.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, payload.data() + 4 * i, 4);
    msg.data[i] = std::bit_cast<float>(to_le(bits));
  }
  return msg;
}

std::vector<float> to_float32(const Eigen::VectorXd& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

Eigen::VectorXd from_float32(const std::vector<float>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace spnp
