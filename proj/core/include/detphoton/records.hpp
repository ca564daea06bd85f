#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace detphoton {

inline constexpr std::int32_t kNoClick = -1;
inline constexpr std::uint32_t kRecordVersion = 1;
inline constexpr char kRecordMagic[4] = {'P', 'H', 'R', 'C'};

enum class Detector : std::uint8_t { kD1 = 1, kD2 = 2, kD3 = 3 };

/// Half-open acceptance window [offset, offset + width) in ticks.
struct GateWindow {
  std::int64_t offset_ticks = 0;
  std::int64_t width_ticks = 1;

  bool contains(std::int64_t tick) const {
    return tick >= offset_ticks && tick < offset_ticks + width_ticks;
  }
  std::int64_t center() const { return offset_ticks + width_ticks / 2; }
  bool operator==(const GateWindow&) const = default;
};

/// Where the gates of one shot sit on the tick axis. D1 windows repeat every
/// trial and are relative to the trial start; the D2/D3 windows are relative
/// to the single read at `read_start_ticks`.
struct GateLayout {
  std::int64_t trial_ticks = 150;
  int trials = 1;
  std::int64_t read_start_ticks = 150;
  GateWindow d1{20, 60};
  GateWindow d2{0, 50};
  GateWindow d3{0, 50};

  void validate() const;
  std::int64_t d1_tick(int trial) const { return (trial - 1) * trial_ticks + d1.center(); }
  std::int64_t d2_tick() const { return read_start_ticks + d2.center(); }
  std::int64_t d3_tick() const { return read_start_ticks + d3.center(); }
};

struct RecordHeader {
  std::uint32_t version = kRecordVersion;
  std::uint32_t tick_ns = 2;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::uint64_t shot_count = 0;
  bool operator==(const RecordHeader&) const = default;
};

/// One protocol repetition after gating. At most one click per detector
/// survives the gate; ticks are counted from the start of the shot.
struct ShotEntry {
  std::uint64_t shot = 0;
  std::int32_t herald_trial = 0;  // 1..N, 0 when nothing heralded
  std::int32_t d1_tick = kNoClick;
  std::int32_t d2_tick = kNoClick;
  std::int32_t d3_tick = kNoClick;

  bool heralded() const { return herald_trial > 0; }
  bool click_d2() const { return d2_tick != kNoClick; }
  bool click_d3() const { return d3_tick != kNoClick; }
  bool operator==(const ShotEntry&) const = default;
};

struct DetectionRecord {
  RecordHeader header;
  std::vector<ShotEntry> shots;
  bool operator==(const DetectionRecord&) const = default;
};

struct RawEvent {
  std::uint64_t shot = 0;
  Detector detector = Detector::kD1;
  std::int64_t tick = 0;
};

/// Builds a record with one entry per shot in [0, header.shot_count).
/// Events outside their windows are dropped; the earliest surviving event per
/// detector is kept. Throws MalformedStreamError if shot indices decrease or
/// exceed the shot count.
DetectionRecord apply_gates(std::span<const RawEvent> events, const GateLayout& layout,
                            const RecordHeader& header);
DetectionRecord apply_gates(const DetectionRecord& record, const GateLayout& layout);

std::vector<RawEvent> to_raw_events(const DetectionRecord& record);

/// Streaming binary writer; the header is written on construction.
class RecordWriter {
 public:
  RecordWriter(std::ostream& out, const RecordHeader& header);
  void append(const ShotEntry& entry);
  std::uint64_t written() const { return written_; }

 private:
  std::ostream& out_;
  std::string buffer_;
  std::uint64_t written_ = 0;
  std::uint64_t last_shot_ = 0;
};

void write_record(std::ostream& out, const DetectionRecord& record);
DetectionRecord read_record(std::istream& in);

/// shot,herald_trial,d1_tick,d2_tick,d3_tick with -1 for no click.
void export_csv(std::ostream& out, const DetectionRecord& record);

/// FNV-1a 64, used for the config hash in record headers.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace detphoton
