#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roiedge/error.hpp"
#include "roiedge/geometry.hpp"

namespace roiedge {

struct GroundTruthObject {
  int frame = 0;
  int cls = 0;
  Rect box;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

// Objects of one frame.
using FrameObjects = std::vector<GroundTruthObject>;

// Annotations grouped by frame index; frames without objects are empty.
class GroundTruth {
 public:
  GroundTruth() = default;
  explicit GroundTruth(std::size_t frames) : frames_(frames) {}

  void add(const GroundTruthObject& o) {
    if (o.frame < 0) throw RangeError("negative ground-truth frame index");
    if (o.box.empty()) throw InputError("ground-truth box must have positive area");
    if (static_cast<std::size_t>(o.frame) >= frames_.size()) frames_.resize(static_cast<std::size_t>(o.frame) + 1);
    frames_[static_cast<std::size_t>(o.frame)].push_back(o);
  }

  std::size_t frame_count() const noexcept { return frames_.size(); }
  void resize(std::size_t frames) {
    if (frames < frames_.size()) {
      for (std::size_t f = frames; f < frames_.size(); ++f)
        if (!frames_[f].empty()) throw RangeError("ground truth has objects beyond frame " + std::to_string(frames));
    }
    frames_.resize(frames);
  }

  const FrameObjects& frame(std::size_t f) const {
    static const FrameObjects kEmpty;
    return f < frames_.size() ? frames_[f] : kEmpty;
  }

  std::vector<GroundTruthObject> all() const {
    std::vector<GroundTruthObject> out;
    for (const auto& f : frames_) out.insert(out.end(), f.begin(), f.end());
    return out;
  }

  std::size_t object_count() const {
    std::size_t n = 0;
    for (const auto& f : frames_) n += f.size();
    return n;
  }

 private:
  std::vector<FrameObjects> frames_;
};

// One JSON object per line: {"frame", "class", "x", "y", "w", "h"}.
inline nlohmann::json to_json_line(const GroundTruthObject& o) {
  return nlohmann::json{{"frame", o.frame}, {"class", o.cls}, {"x", o.box.x},
                        {"y", o.box.y},     {"w", o.box.w},     {"h", o.box.h}};
}

inline GroundTruthObject gt_object_from_json(const nlohmann::json& j) {
  try {
    GroundTruthObject o;
    o.frame = j.at("frame").get<int>();
    o.cls = j.at("class").get<int>();
    o.box = Rect{j.at("x").get<std::int64_t>(), j.at("y").get<std::int64_t>(), j.at("w").get<std::int64_t>(),
                 j.at("h").get<std::int64_t>()};
    return o;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad ground-truth record: ") + e.what());
  }
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path, std::size_t frames = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  GroundTruth gt(frames);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      gt.add(gt_object_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return gt;
}

inline void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& o : gt.all()) out << to_json_line(o).dump() << '\n';
}

}  // namespace roiedge
