#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sc2tools/bytes.hpp"

namespace sc2tools::versioned {

/// Type tags of the self-describing "versioned" serialization used by
/// replay archive members. Values follow the public s2protocol
/// VersionedDecoder so real member bytes dispatch the same way.
enum class Tag : std::uint8_t {
  Array = 0x00,     ///< vint count, then values
  BitArray = 0x01,  ///< vint bit count, then ceil(bits/8) bytes
  Blob = 0x02,      ///< vint length, then bytes
  Choice = 0x03,    ///< not part of the value model; decodes as UnknownTag
  Optional = 0x04,  ///< presence byte (0/1), then value if present
  Struct = 0x05,    ///< vint field count, then (vint field id, value) pairs
  Bool = 0x06,      ///< one byte, 0 or 1
  FourCC = 0x07,    ///< four raw bytes
  U64 = 0x08,       ///< not part of the value model; decodes as UnknownTag
  Int = 0x09,       ///< vint
};

/// Maximum nesting accepted by the decoder.
inline constexpr int kMaxDepth = 64;

class TypedValue;
using FieldId = std::uint32_t;

struct IntValue {
  std::int64_t value = 0;
};
struct BoolValue {
  bool value = false;
};
struct BlobValue {
  Bytes bytes;
};
struct FourCCValue {
  std::array<std::uint8_t, 4> code{};
};
struct BitArrayValue {
  std::uint64_t bit_count = 0;
  Bytes bytes;  ///< size == ceil(bit_count / 8)
};
struct ArrayValue {
  std::vector<TypedValue> items;
};
struct OptionalValue {
  std::shared_ptr<const TypedValue> value;  ///< null when absent
};
struct StructValue {
  std::vector<std::pair<FieldId, TypedValue>> fields;  ///< ascending, unique ids
};

class TypedValue {
 public:
  using Variant = std::variant<IntValue, BoolValue, BlobValue, FourCCValue, BitArrayValue,
                               ArrayValue, OptionalValue, StructValue>;

  TypedValue() : value_(IntValue{}) {}
  template <typename T>
    requires(!std::is_same_v<std::remove_cvref_t<T>, TypedValue> &&
             std::is_constructible_v<Variant, T &&>)
  TypedValue(T&& v) : value_(std::forward<T>(v)) {}

  static TypedValue integer(std::int64_t v) { return IntValue{v}; }
  static TypedValue boolean(bool v) { return BoolValue{v}; }
  static TypedValue blob(Bytes b) { return BlobValue{std::move(b)}; }
  static TypedValue blob(std::string_view s) { return BlobValue{to_bytes(s)}; }
  static TypedValue array(std::vector<TypedValue> items) { return ArrayValue{std::move(items)}; }
  static TypedValue absent() { return OptionalValue{}; }
  static TypedValue present(TypedValue v) {
    return OptionalValue{std::make_shared<const TypedValue>(std::move(v))};
  }
  /// Fields are sorted by id; duplicate ids are rejected with InvalidValue.
  static TypedValue structure(std::vector<std::pair<FieldId, TypedValue>> fields);

  const Variant& variant() const { return value_; }

  template <typename T>
  const T* get_if() const { return std::get_if<T>(&value_); }

  /// Field lookup on a Struct; nullptr for other kinds or a missing id.
  const TypedValue* field(FieldId id) const;

  friend bool operator==(const TypedValue& a, const TypedValue& b);

 private:
  Variant value_;
};

bool operator==(const OptionalValue& a, const OptionalValue& b);
inline bool operator==(const IntValue& a, const IntValue& b) { return a.value == b.value; }
inline bool operator==(const BoolValue& a, const BoolValue& b) { return a.value == b.value; }
inline bool operator==(const BlobValue& a, const BlobValue& b) { return a.bytes == b.bytes; }
inline bool operator==(const FourCCValue& a, const FourCCValue& b) { return a.code == b.code; }
inline bool operator==(const BitArrayValue& a, const BitArrayValue& b) {
  return a.bit_count == b.bit_count && a.bytes == b.bytes;
}
bool operator==(const ArrayValue& a, const ArrayValue& b);
bool operator==(const StructValue& a, const StructValue& b);

/// Errors: UnknownTag, Truncated, TrailingBytes, Overflow, InvalidValue,
/// DepthExceeded. Total over arbitrary input.
TypedValue decode_versioned(ByteView data);

/// Canonical encoding; decode_versioned(encode_versioned(v)) == v.
Bytes encode_versioned(const TypedValue& value);

/// Sign-and-magnitude variable-length integer: the low bit of the first
/// byte carries the sign, 6 payload bits follow, then 7 bits per
/// continuation byte.
void append_vint(Bytes& out, std::int64_t value);

}  // namespace sc2tools::versioned
