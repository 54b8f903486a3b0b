#pragma once

#include "spnp/schedule.hpp"
#include "spnp/score_function.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spnp {

inline constexpr int kProtocolVersion = 1;
inline constexpr const char* kProtocolHeader = "X-SPNP-Proto";

/// Contract reported by GET /info.
struct ServedModelInfo {
  Convention convention = Convention::VP;
  int T = 0;
  std::optional<NoiseSchedule> schedule;
  ValueDomain value_domain = ValueDomain::Unit;
  std::string output_kind = "score";
  std::string layout = "NCHW float32 little-endian";
  std::string t_policy = "real-valued";

  [[nodiscard]] nlohmann::json to_json() const;
  static ServedModelInfo from_json(const nlohmann::json& j);
};

/// Body layout shared by requests and responses: one line of JSON, a '\n',
/// then prod(shape) float32 values in little-endian byte order.
struct TensorMessage {
  nlohmann::json header;
  std::vector<float> data;
};

std::string encode_tensor_message(const nlohmann::json& header, const std::vector<float>& data);
/// ProtocolError on a missing newline, bad JSON, a missing/invalid "shape",
/// or a payload whose size disagrees with the shape.
TensorMessage decode_tensor_message(std::string_view body);

std::vector<float> to_float32(const Eigen::VectorXd& v);
Eigen::VectorXd from_float32(const std::vector<float>& v);

/// Product of a validated NCHW shape.
std::size_t shape_elements(const std::vector<std::int64_t>& shape);

}  // namespace spnp
