#include "detphoton/records.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>

#include "detphoton/errors.hpp"

namespace detphoton {
namespace {

void put_varint(std::string& buf, std::uint64_t v) {
  while (v >= 0x80) {
    buf.push_back(static_cast<char>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  buf.push_back(static_cast<char>(v));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint8_t get_byte(std::istream& in) {
  const int c = in.get();
  if (c == std::char_traits<char>::eof()) throw MalformedStreamError("truncated record");
  return static_cast<std::uint8_t>(c);
}

std::uint64_t get_varint(std::istream& in) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 64; shift += 7) {
    const std::uint8_t b = get_byte(in);
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if ((b & 0x80) == 0) return v;
  }
  throw MalformedStreamError("varint overflow");
}

std::uint64_t get_le(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(get_byte(in)) << (8 * i);
  return v;
}

std::int32_t narrow_tick(std::int64_t tick) {
  if (tick < 0 || tick > std::numeric_limits<std::int32_t>::max()) {
    throw MalformedStreamError("tick out of range: " + std::to_string(tick));
  }
  return static_cast<std::int32_t>(tick);
}

void encode_entry(std::string& buf, const ShotEntry& e) {
  put_varint(buf, e.shot);
  put_varint(buf, static_cast<std::uint64_t>(e.herald_trial));
  const std::int32_t ticks[3] = {e.d1_tick, e.d2_tick, e.d3_tick};
  std::uint8_t count = 0;
  for (std::int32_t t : ticks) count += t != kNoClick ? 1 : 0;
  buf.push_back(static_cast<char>(count));
  for (int d = 0; d < 3; ++d) {
    if (ticks[d] == kNoClick) continue;
    buf.push_back(static_cast<char>(d + 1));
    put_varint(buf, static_cast<std::uint64_t>(ticks[d]));
  }
}

}  // namespace

void GateLayout::validate() const {
  if (trial_ticks <= 0) throw DomainError("trial_ticks must be > 0");
  if (trials < 1) throw DomainError("trials must be >= 1");
  for (const GateWindow* w : {&d1, &d2, &d3}) {
    if (w->width_ticks <= 0) throw DomainError("gate width must be > 0");
    if (w->offset_ticks < 0) throw DomainError("gate offset must be >= 0");
  }
  if (d1.offset_ticks + d1.width_ticks > trial_ticks) {
    throw DomainError("D1 gate must fit inside one trial");
  }
  if (read_start_ticks < trials * trial_ticks) {
    throw DomainError("read gate must start after the last write trial");
  }
}

DetectionRecord apply_gates(std::span<const RawEvent> events, const GateLayout& layout,
                            const RecordHeader& header) {
  layout.validate();
  DetectionRecord rec;
  rec.header = header;
  rec.shots.resize(header.shot_count);
  for (std::uint64_t i = 0; i < header.shot_count; ++i) rec.shots[i].shot = i;

  auto keep_earliest = [](std::int32_t& slot, std::int64_t tick) {
    const std::int32_t t = narrow_tick(tick);
    if (slot == kNoClick || t < slot) slot = t;
  };

  std::uint64_t previous = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const RawEvent& ev = events[i];
    if (i > 0 && ev.shot < previous) {
      throw MalformedStreamError("shot index decreased at event " + std::to_string(i));
    }
    if (ev.shot >= header.shot_count) {
      throw MalformedStreamError("shot index " + std::to_string(ev.shot) +
                                 " beyond shot count");
    }
    previous = ev.shot;
    ShotEntry& entry = rec.shots[ev.shot];
    switch (ev.detector) {
      case Detector::kD1: {
        if (ev.tick < 0) break;
        const std::int64_t trial = ev.tick / layout.trial_ticks + 1;
        if (trial > layout.trials) break;
        if (!layout.d1.contains(ev.tick % layout.trial_ticks)) break;
        // The protocol stops at the first herald.
        if (entry.d1_tick == kNoClick || ev.tick < entry.d1_tick) {
          entry.d1_tick = narrow_tick(ev.tick);
          entry.herald_trial = static_cast<std::int32_t>(trial);
        }
        break;
      }
      case Detector::kD2:
        if (layout.d2.contains(ev.tick - layout.read_start_ticks)) keep_earliest(entry.d2_tick, ev.tick);
        break;
      case Detector::kD3:
        if (layout.d3.contains(ev.tick - layout.read_start_ticks)) keep_earliest(entry.d3_tick, ev.tick);
        break;
      default:
        throw MalformedStreamError("unknown detector id");
    }
  }
  return rec;
}

std::vector<RawEvent> to_raw_events(const DetectionRecord& record) {
  std::vector<RawEvent> events;
  for (const ShotEntry& e : record.shots) {
    if (e.d1_tick != kNoClick) events.push_back({e.shot, Detector::kD1, e.d1_tick});
    if (e.d2_tick != kNoClick) events.push_back({e.shot, Detector::kD2, e.d2_tick});
    if (e.d3_tick != kNoClick) events.push_back({e.shot, Detector::kD3, e.d3_tick});
  }
  return events;
}

DetectionRecord apply_gates(const DetectionRecord& record, const GateLayout& layout) {
  for (std::size_t i = 0; i < record.shots.size(); ++i) {
    if (record.shots[i].shot != i) {
      throw MalformedStreamError("gating needs a dense record (shot i at position i)");
    }
  }
  const std::vector<RawEvent> events = to_raw_events(record);
  RecordHeader header = record.header;
  header.shot_count = record.shots.size();
  return apply_gates(events, layout, header);
}

RecordWriter::RecordWriter(std::ostream& out, const RecordHeader& header) : out_(out) {
  std::string buf(kRecordMagic, 4);
  put_u32(buf, header.version);
  put_u32(buf, header.tick_ns);
  put_u64(buf, header.config_hash);
  put_u64(buf, header.seed);
  put_u64(buf, header.shot_count);
  out_.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void RecordWriter::append(const ShotEntry& entry) {
  if (written_ > 0 && entry.shot <= last_shot_) {
    throw MalformedStreamError("shot indices must be strictly increasing");
  }
  buffer_.clear();
  encode_entry(buffer_, entry);
  out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
  last_shot_ = entry.shot;
  ++written_;
}

void write_record(std::ostream& out, const DetectionRecord& record) {
  RecordHeader header = record.header;
  header.shot_count = record.shots.size();
  RecordWriter writer(out, header);
  for (const ShotEntry& e : record.shots) writer.append(e);
}

DetectionRecord read_record(std::istream& in) {
  char magic[4];
  for (char& c : magic) c = static_cast<char>(get_byte(in));
  if (!std::equal(magic, magic + 4, kRecordMagic)) throw MalformedStreamError("bad magic");
  DetectionRecord rec;
  rec.header.version = static_cast<std::uint32_t>(get_le(in, 4));
  if (rec.header.version != kRecordVersion) {
    throw MalformedStreamError("unsupported record version " +
                               std::to_string(rec.header.version));
  }
  rec.header.tick_ns = static_cast<std::uint32_t>(get_le(in, 4));
  rec.header.config_hash = get_le(in, 8);
  rec.header.seed = get_le(in, 8);
  rec.header.shot_count = get_le(in, 8);
  rec.shots.reserve(static_cast<std::size_t>(
      std::min<std::uint64_t>(rec.header.shot_count, std::uint64_t{1} << 24)));
  for (std::uint64_t i = 0; i < rec.header.shot_count; ++i) {
    ShotEntry e;
    e.shot = get_varint(in);
    if (i > 0 && e.shot <= rec.shots.back().shot) {
      throw MalformedStreamError("shot indices must be strictly increasing");
    }
    e.herald_trial = static_cast<std::int32_t>(get_varint(in));
    const std::uint8_t count = get_byte(in);
    for (std::uint8_t k = 0; k < count; ++k) {
      const std::uint8_t det = get_byte(in);
      const std::int32_t tick = narrow_tick(static_cast<std::int64_t>(get_varint(in)));
      switch (det) {
        case 1: e.d1_tick = tick; break;
        case 2: e.d2_tick = tick; break;
        case 3: e.d3_tick = tick; break;
        default: throw MalformedStreamError("unknown detector id " + std::to_string(det));
      }
    }
    rec.shots.push_back(e);
  }
  return rec;
}

void export_csv(std::ostream& out, const DetectionRecord& record) {
  out << "shot,herald_trial,d1_tick,d2_tick,d3_tick\n";
  for (const ShotEntry& e : record.shots) {
    out << e.shot << ',' << e.herald_trial << ',' << e.d1_tick << ',' << e.d2_tick << ','
        << e.d3_tick << '\n';
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detphoton
