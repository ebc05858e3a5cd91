#include "sc2tools/versioned.hpp"

#include <algorithm>
#include <limits>

#include "sc2tools/error.hpp"

namespace sc2tools::versioned {

TypedValue TypedValue::structure(std::vector<std::pair<FieldId, TypedValue>> fields) {
  std::stable_sort(fields.begin(), fields.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < fields.size(); ++i) {
    if (fields[i].first == fields[i - 1].first) {
      throw Error(Errc::InvalidValue, "field " + std::to_string(fields[i].first), "duplicate id");
    }
  }
  return StructValue{std::move(fields)};
}

const TypedValue* TypedValue::field(FieldId id) const {
  const auto* s = get_if<StructValue>();
  if (!s) return nullptr;
  auto it = std::lower_bound(s->fields.begin(), s->fields.end(), id,
                             [](const auto& f, FieldId key) { return f.first < key; });
  if (it == s->fields.end() || it->first != id) return nullptr;
  return &it->second;
}

bool operator==(const TypedValue& a, const TypedValue& b) { return a.value_ == b.value_; }

bool operator==(const OptionalValue& a, const OptionalValue& b) {
  if (!a.value || !b.value) return !a.value && !b.value;
  return *a.value == *b.value;
}

bool operator==(const ArrayValue& a, const ArrayValue& b) { return a.items == b.items; }

bool operator==(const StructValue& a, const StructValue& b) { return a.fields == b.fields; }

void append_vint(Bytes& out, std::int64_t value) {
  const bool negative = value < 0;
  // Magnitude as unsigned so INT64_MIN is representable.
  std::uint64_t magnitude = negative ? ~static_cast<std::uint64_t>(value) + 1
                                     : static_cast<std::uint64_t>(value);
  std::uint8_t first = static_cast<std::uint8_t>(((magnitude & 0x3F) << 1) | (negative ? 1 : 0));
  magnitude >>= 6;
  if (magnitude != 0) first |= 0x80;
  out.push_back(first);
  while (magnitude != 0) {
    std::uint8_t b = magnitude & 0x7F;
    magnitude >>= 7;
    if (magnitude != 0) b |= 0x80;
    out.push_back(b);
  }
}

namespace {

class Reader {
 public:
  explicit Reader(ByteView data) : data_(data) {}

  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint8_t byte() {
    if (pos_ >= data_.size()) throw Error(Errc::Truncated);
    return data_[pos_++];
  }

  ByteView take(std::uint64_t n) {
    if (n > remaining()) throw Error(Errc::Truncated);
    ByteView out = data_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

  std::int64_t vint() {
    std::uint8_t b = byte();
    const bool negative = b & 1;
    std::uint64_t magnitude = (b >> 1) & 0x3F;
    unsigned shift = 6;
    while (b & 0x80) {
      b = byte();
      const std::uint64_t chunk = b & 0x7F;
      if (shift >= 64 || (shift > 57 && (chunk >> (64 - shift)) != 0)) {
        throw Error(Errc::Overflow, {}, "integer exceeds 64 bits");
      }
      magnitude |= chunk << shift;
      shift += 7;
    }
    constexpr std::uint64_t kMaxPositive = std::numeric_limits<std::int64_t>::max();
    if (negative) {
      if (magnitude > kMaxPositive + 1) throw Error(Errc::Overflow, {}, "integer below int64 range");
      return static_cast<std::int64_t>(~magnitude + 1);
    }
    if (magnitude > kMaxPositive) throw Error(Errc::Overflow, {}, "integer above int64 range");
    return static_cast<std::int64_t>(magnitude);
  }

  std::uint64_t length() {
    const std::int64_t v = vint();
    if (v < 0) throw Error(Errc::InvalidValue, {}, "negative length");
    return static_cast<std::uint64_t>(v);
  }

  TypedValue value(int depth) {
    if (depth > kMaxDepth) throw Error(Errc::DepthExceeded);
    const std::uint8_t tag = byte();
    switch (static_cast<Tag>(tag)) {
      case Tag::Int:
        return IntValue{vint()};
      case Tag::Bool: {
        const std::uint8_t b = byte();
        if (b > 1) throw Error(Errc::InvalidValue, {}, "bool byte out of range");
        return BoolValue{b == 1};
      }
      case Tag::Blob: {
        const ByteView bytes = take(length());
        return BlobValue{Bytes(bytes.begin(), bytes.end())};
      }
      case Tag::FourCC: {
        FourCCValue v;
        const ByteView bytes = take(4);
        std::copy(bytes.begin(), bytes.end(), v.code.begin());
        return v;
      }
      case Tag::BitArray: {
        const std::uint64_t bits = length();
        const ByteView bytes = take(bits / 8 + (bits % 8 != 0));
        return BitArrayValue{bits, Bytes(bytes.begin(), bytes.end())};
      }
      case Tag::Array: {
        const std::uint64_t count = length();
        if (count > remaining()) throw Error(Errc::Truncated, {}, "array count exceeds input");
        ArrayValue v;
        v.items.reserve(static_cast<std::size_t>(count));
        for (std::uint64_t i = 0; i < count; ++i) v.items.push_back(value(depth + 1));
        return v;
      }
      case Tag::Optional: {
        const std::uint8_t present = byte();
        if (present > 1) throw Error(Errc::InvalidValue, {}, "optional flag out of range");
        if (!present) return OptionalValue{};
        return OptionalValue{std::make_shared<const TypedValue>(value(depth + 1))};
      }
      case Tag::Struct: {
        const std::uint64_t count = length();
        if (count > remaining()) throw Error(Errc::Truncated, {}, "field count exceeds input");
        StructValue v;
        v.fields.reserve(static_cast<std::size_t>(count));
        for (std::uint64_t i = 0; i < count; ++i) {
          const std::uint64_t id = length();
          if (id > std::numeric_limits<FieldId>::max()) throw Error(Errc::Overflow, {}, "field id");
          if (!v.fields.empty() && id <= v.fields.back().first) {
            throw Error(Errc::InvalidValue, {}, "field ids not strictly ascending");
          }
          v.fields.emplace_back(static_cast<FieldId>(id), value(depth + 1));
        }
        return v;
      }
      default:
        break;
    }
    throw Error(Errc::UnknownTag, {}, "tag 0x" + to_hex(ByteView(&tag, 1)));
  }

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

void encode_into(Bytes& out, const TypedValue& value) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::Int));
          append_vint(out, v.value);
        } else if constexpr (std::is_same_v<T, BoolValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::Bool));
          out.push_back(v.value ? 1 : 0);
        } else if constexpr (std::is_same_v<T, BlobValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::Blob));
          append_vint(out, static_cast<std::int64_t>(v.bytes.size()));
          out.insert(out.end(), v.bytes.begin(), v.bytes.end());
        } else if constexpr (std::is_same_v<T, FourCCValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::FourCC));
          out.insert(out.end(), v.code.begin(), v.code.end());
        } else if constexpr (std::is_same_v<T, BitArrayValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::BitArray));
          append_vint(out, static_cast<std::int64_t>(v.bit_count));
          out.insert(out.end(), v.bytes.begin(), v.bytes.end());
        } else if constexpr (std::is_same_v<T, ArrayValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::Array));
          append_vint(out, static_cast<std::int64_t>(v.items.size()));
          for (const auto& item : v.items) encode_into(out, item);
        } else if constexpr (std::is_same_v<T, OptionalValue>) {
          out.push_back(static_cast<std::uint8_t>(Tag::Optional));
          out.push_back(v.value ? 1 : 0);
          if (v.value) encode_into(out, *v.value);
        } else {
          out.push_back(static_cast<std::uint8_t>(Tag::Struct));
          append_vint(out, static_cast<std::int64_t>(v.fields.size()));
          for (const auto& [id, field] : v.fields) {
            append_vint(out, static_cast<std::int64_t>(id));
            encode_into(out, field);
          }
        }
      },
      value.variant());
}

}  // namespace

TypedValue decode_versioned(ByteView data) {
  Reader reader(data);
  TypedValue value = reader.value(0);
  if (!reader.done()) {
    throw Error(Errc::TrailingBytes, {}, std::to_string(reader.remaining()) + " bytes after value");
  }
  return value;
}

Bytes encode_versioned(const TypedValue& value) {
  Bytes out;
  encode_into(out, value);
  return out;
}

}  // namespace sc2tools::versioned
