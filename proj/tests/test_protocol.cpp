#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roiedge/protocol.hpp"

using namespace roiedge;

namespace {

std::vector<std::uint8_t> frame_of(const std::string& body) {
  std::vector<std::uint8_t> out;
  const auto n = static_cast<std::uint32_t>(body.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

}  // namespace

TEST(Protocol, BoxWithLargePayloadRoundTrips) {
  const Message m = BoxMessage{12, 4, Rect{1920, 1080, 300, 200}, 0.75, 100 * 1000.0};
  EXPECT_EQ(decode_message(encode_message(m)), m);
}

TEST(Protocol, LittleEndianLengthPrefix) {
  const auto bytes = encode_message(ResultMessage{1, 3, {}});
  const std::uint32_t n = bytes[0] | bytes[1] << 8 | bytes[2] << 16 | static_cast<std::uint32_t>(bytes[3]) << 24;
  EXPECT_EQ(n + 4, bytes.size());
}

TEST(Protocol, RandomMessagesRoundTrip) {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const auto m = oracle::random_message(rng);
    ASSERT_EQ(decode_message(encode_message(m)), m) << "message " << i;
  }
}

TEST(Protocol, EveryTruncationIsAProtocolError) {
  const auto bytes = encode_message(ResultMessage{7, 5, {{1, Rect{1, 2, 3, 4}, 0.5}, {2, Rect{5, 6, 7, 8}, 1.0}}});
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    EXPECT_THROW(decode_message(std::span(bytes).first(cut)), ProtocolError) << "cut at " << cut;
  }
}

TEST(Protocol, TrailingBytesRejected) {
  auto bytes = encode_message(BoxMessage{});
  bytes.push_back('x');
  EXPECT_THROW(decode_message(bytes), ProtocolError);
}

TEST(Protocol, OversizedLengthRejected) {
  const std::vector<std::uint8_t> bytes{0xff, 0xff, 0xff, 0x7f};
  EXPECT_THROW(decode_message(bytes), ProtocolError);
}

TEST(Protocol, MalformedBodiesRejectedWithOffset) {
  const std::vector<std::string> bad{
      "not json",
      "[]",
      R"({"type":"box"})",
      R"({"type":"nope","frame":0,"part":1})",
      R"({"type":"box","frame":0,"part":9,"rect":[0,0,1,1],"rate":1,"payload_bytes":0})",
      R"({"type":"box","frame":0,"part":1,"rect":[0,0,0,1],"rate":1,"payload_bytes":0})",
      R"({"type":"box","frame":0,"part":1,"rect":[0,0,1,1],"rate":0,"payload_bytes":0})",
      R"({"type":"box","frame":-1,"part":1,"rect":[0,0,1,1],"rate":1,"payload_bytes":0})",
      R"({"type":"box","frame":0,"part":1,"rect":[0,0,1,1],"rate":1,"payload_bytes":0,"extra":1})",
      R"({"type":"result","frame":0,"part":1,"detections":[{"class":0,"rect":[0,0,1,1],"confidence":2}]})",
      R"({"type":"result","frame":0,"part":1,"detections":{}})",
  };
  for (const auto& body : bad) {
    try {
      decode_message(frame_of(body));
      ADD_FAILURE() << "accepted: " << body;
    } catch (const ProtocolError& e) {
      EXPECT_GE(e.offset(), kFrameHeaderSize) << body;
    }
  }
}

TEST(Protocol, ByteFlipsNeverCrash) {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    auto bytes = encode_message(oracle::random_message(rng));
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(bytes.size()) - 1));
    bytes[k] = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    try {
      decode_message(bytes);  // may still be a valid message
    } catch (const ProtocolError&) {
    }
  }
}
