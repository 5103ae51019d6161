#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiedge/error.hpp"
#include "roiedge/geometry.hpp"
#include "roiedge/oracle.hpp"

// Device↔edge wire format: u32 little-endian body length, then a JSON body.
//   {"type":"box","frame":F,"part":P,"rect":[x,y,w,h],"rate":r,"payload_bytes":n}
//   {"type":"result","frame":F,"part":P,"detections":[{"class":c,"rect":[x,y,w,h],"confidence":s},...]}
namespace roiedge {

struct BoxMessage {
  std::int64_t frame = 0;
  int part = 0;
  Rect rect;
  double rate = 1.0;
  double payload_bytes = 0.0;

  friend bool operator==(const BoxMessage&, const BoxMessage&) = default;
};

struct ResultMessage {
  std::int64_t frame = 0;
  int part = 0;
  std::vector<Detection> detections;

  friend bool operator==(const ResultMessage&, const ResultMessage&) = default;
};

using Message = std::variant<BoxMessage, ResultMessage>;

inline constexpr std::size_t kFrameHeaderSize = 4;
inline constexpr std::uint32_t kMaxBodySize = 16u << 20;

namespace detail {

inline nlohmann::json rect_json(const Rect& r) { return nlohmann::json::array({r.x, r.y, r.w, r.h}); }

struct BodyError {
  std::string what;
};

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw BodyError{"expected an object"};
  for (const char* k : keys)
    if (!j.contains(k)) throw BodyError{std::string("missing field '") + k + "'"};
  if (j.size() != keys.size()) throw BodyError{"unexpected extra fields"};
}

inline std::int64_t int_field(const nlohmann::json& j, const char* key, std::int64_t lo, std::int64_t hi) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw BodyError{std::string("field '") + key + "' must be an integer"};
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) throw BodyError{std::string("field '") + key + "' out of range"};
  return x;
}

inline double real_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw BodyError{std::string("field '") + key + "' must be a number"};
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw BodyError{std::string("field '") + key + "' must be finite"};
  return x;
}

inline Rect rect_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 4) throw BodyError{std::string("field '") + key + "' must be [x,y,w,h]"};
  std::int64_t xs[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number_integer()) throw BodyError{std::string("field '") + key + "' must hold integers"};
    xs[i] = v[i].get<std::int64_t>();
  }
  if (xs[0] < 0 || xs[1] < 0 || xs[2] <= 0 || xs[3] <= 0) throw BodyError{std::string("field '") + key + "' invalid"};
  return Rect{xs[0], xs[1], xs[2], xs[3]};
}

inline Message message_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw BodyError{"missing message type"};
  const auto type = j["type"].get<std::string>();
  if (type == "box") {
    require_keys(j, {"type", "frame", "part", "rect", "rate", "payload_bytes"});
    BoxMessage m;
    m.frame = int_field(j, "frame", 0, INT64_MAX);
    m.part = static_cast<int>(int_field(j, "part", 1, 5));
    m.rect = rect_field(j, "rect");
    m.rate = real_field(j, "rate");
    if (!(m.rate > 0.0 && m.rate <= 1.0)) throw BodyError{"field 'rate' must be in (0, 1]"};
    m.payload_bytes = real_field(j, "payload_bytes");
    if (m.payload_bytes < 0.0) throw BodyError{"field 'payload_bytes' must be >= 0"};
    return m;
  }
  if (type == "result") {
    require_keys(j, {"type", "frame", "part", "detections"});
    ResultMessage m;
    m.frame = int_field(j, "frame", 0, INT64_MAX);
    m.part = static_cast<int>(int_field(j, "part", 1, 5));
    const auto& dets = j.at("detections");
    if (!dets.is_array()) throw BodyError{"field 'detections' must be an array"};
    for (const auto& d : dets) {
      require_keys(d, {"class", "rect", "confidence"});
      Detection det;
      det.cls = static_cast<int>(int_field(d, "class", 0, INT32_MAX));
      det.box = rect_field(d, "rect");
      det.confidence = real_field(d, "confidence");
      if (!(det.confidence > 0.0 && det.confidence <= 1.0)) throw BodyError{"detection confidence must be in (0, 1]"};
      m.detections.push_back(det);
    }
    return m;
  }
  throw BodyError{"unknown message type '" + type + "'"};
}

}  // namespace detail

inline nlohmann::json message_to_json(const Message& msg) {
  return std::visit(
      [](const auto& m) -> nlohmann::json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BoxMessage>) {
          return nlohmann::json{{"type", "box"},
                                {"frame", m.frame},
                                {"part", m.part},
                                {"rect", detail::rect_json(m.rect)},
                                {"rate", m.rate},
                                {"payload_bytes", m.payload_bytes}};
        } else {
          auto dets = nlohmann::json::array();
          for (const auto& d : m.detections)
            dets.push_back({{"class", d.cls}, {"rect", detail::rect_json(d.box)}, {"confidence", d.confidence}});
          return nlohmann::json{{"type", "result"}, {"frame", m.frame}, {"part", m.part}, {"detections", dets}};
        }
      },
      msg);
}

inline std::vector<std::uint8_t> encode_message(const Message& msg) {
  const std::string body = message_to_json(msg).dump();
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + body.size());
  const auto n = static_cast<std::uint32_t>(body.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

// Body length announced by a frame header, validated against the size cap.
inline std::uint32_t decode_frame_length(std::span<const std::uint8_t> header) {
  if (header.size() < kFrameHeaderSize) throw ProtocolError("truncated frame header", header.size());
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(header[static_cast<std::size_t>(i)]) << (8 * i);
  if (n > kMaxBodySize) throw ProtocolError("frame body of " + std::to_string(n) + " bytes exceeds limit", 0);
  return n;
}

inline Message decode_body(std::span<const std::uint8_t> body, std::size_t base_offset = kFrameHeaderSize) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body.begin(), body.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed body: ") + e.what(), base_offset + (e.byte > 0 ? e.byte - 1 : 0));
  } catch (const nlohmann::json::exception& e) {
    // e.g. a number too large for a double
    throw ProtocolError(std::string("malformed body: ") + e.what(), base_offset);
  }
  try {
    return detail::message_from_json(j);
  } catch (const detail::BodyError& e) {
    throw ProtocolError("invalid message: " + e.what, base_offset);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("invalid message: ") + e.what(), base_offset);
  }
}

// Decodes exactly one framed message occupying the whole buffer.
inline Message decode_message(std::span<const std::uint8_t> bytes) {
  const std::uint32_t n = decode_frame_length(bytes);
  if (bytes.size() < kFrameHeaderSize + n) throw ProtocolError("truncated frame body", bytes.size());
  if (bytes.size() > kFrameHeaderSize + n) throw ProtocolError("trailing bytes after frame", kFrameHeaderSize + n);
  return decode_body(bytes.subspan(kFrameHeaderSize, n));
}

}  // namespace roiedge
