#include "sc2tools/versioned_json.hpp"

#include "sc2tools/error.hpp"

namespace sc2tools::versioned {

using nlohmann::json;

json value_to_json(const TypedValue& value) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, IntValue>) {
          return {{"int", v.value}};
        } else if constexpr (std::is_same_v<T, BoolValue>) {
          return {{"bool", v.value}};
        } else if constexpr (std::is_same_v<T, BlobValue>) {
          return {{"blob", to_hex(v.bytes)}};
        } else if constexpr (std::is_same_v<T, FourCCValue>) {
          return {{"fourcc", to_hex(v.code)}};
        } else if constexpr (std::is_same_v<T, BitArrayValue>) {
          return {{"bits", v.bit_count}, {"hex", to_hex(v.bytes)}};
        } else if constexpr (std::is_same_v<T, ArrayValue>) {
          json items = json::array();
          for (const auto& item : v.items) items.push_back(value_to_json(item));
          return {{"array", std::move(items)}};
        } else if constexpr (std::is_same_v<T, OptionalValue>) {
          return {{"optional", v.value ? value_to_json(*v.value) : json(nullptr)}};
        } else {
          json fields = json::array();
          for (const auto& [id, field] : v.fields) fields.push_back(json::array({id, value_to_json(field)}));
          return {{"struct", std::move(fields)}};
        }
      },
      value.variant());
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw Error(Errc::InvalidValue, path, why);
}

Bytes hex_field(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected hex string");
  try {
    return from_hex(j.get_ref<const std::string&>());
  } catch (const Error&) {
    fail(path, "invalid hex");
  }
}

}  // namespace

TypedValue value_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected object");
  if (j.size() == 2 && j.contains("bits") && j.contains("hex")) {
    const json& bits = j["bits"];
    if (!bits.is_number_unsigned()) fail(path + ".bits", "expected unsigned integer");
    BitArrayValue v{bits.get<std::uint64_t>(), hex_field(j["hex"], path + ".hex")};
    if (v.bytes.size() != v.bit_count / 8 + (v.bit_count % 8 != 0)) {
      fail(path + ".hex", "length does not match bit count");
    }
    return v;
  }
  if (j.size() != 1) fail(path, "expected exactly one kind key");
  const std::string kind = j.begin().key();
  const json& body = j.begin().value();
  const std::string sub = path + "." + kind;
  if (kind == "int") {
    if (!body.is_number_integer()) fail(sub, "expected integer");
    if (body.is_number_unsigned() && body.get<std::uint64_t>() > INT64_MAX) fail(sub, "overflow");
    return IntValue{body.get<std::int64_t>()};
  }
  if (kind == "bool") {
    if (!body.is_boolean()) fail(sub, "expected boolean");
    return BoolValue{body.get<bool>()};
  }
  if (kind == "blob") return BlobValue{hex_field(body, sub)};
  if (kind == "fourcc") {
    const Bytes code = hex_field(body, sub);
    if (code.size() != 4) fail(sub, "expected 4 bytes");
    FourCCValue v;
    std::copy(code.begin(), code.end(), v.code.begin());
    return v;
  }
  if (kind == "array") {
    if (!body.is_array()) fail(sub, "expected array");
    ArrayValue v;
    for (std::size_t i = 0; i < body.size(); ++i) {
      v.items.push_back(value_from_json(body[i], sub + "[" + std::to_string(i) + "]"));
    }
    return v;
  }
  if (kind == "optional") {
    if (body.is_null()) return OptionalValue{};
    return OptionalValue{std::make_shared<const TypedValue>(value_from_json(body, sub))};
  }
  if (kind == "struct") {
    if (!body.is_array()) fail(sub, "expected array of [id, value]");
    StructValue v;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const std::string at = sub + "[" + std::to_string(i) + "]";
      const json& pair = body[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned()) {
        fail(at, "expected [id, value]");
      }
      const auto id = pair[0].get<std::uint64_t>();
      if (id > UINT32_MAX) fail(at, "field id out of range");
      if (!v.fields.empty() && id <= v.fields.back().first) fail(at, "field ids not ascending");
      v.fields.emplace_back(static_cast<FieldId>(id), value_from_json(pair[1], at));
    }
    return v;
  }
  fail(path, "unknown kind '" + kind + "'");
}

}  // namespace sc2tools::versioned
