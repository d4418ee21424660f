// Minimal ordered JSON document builder for report output. Object keys
// keep insertion order and floating-point numbers are always serialized
// with 17 significant digits, so identical inputs produce byte-identical
// reports regardless of platform or thread count. (Parsing of user JSON
// goes through the vendored nlohmann library instead; this exists only
// because report bytes are a determinism contract.)

#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ctseg/core.hpp"

namespace ctseg {

class JsonValue {
public:
  using Array = std::vector<JsonValue>;
  using Object = std::vector<std::pair<std::string, JsonValue>>;

  JsonValue() : value_(nullptr) {}
  JsonValue(std::nullptr_t) : value_(nullptr) {}
  JsonValue(bool b) : value_(b) {}
  JsonValue(double d) : value_(d) {}
  JsonValue(int i) : value_(static_cast<std::int64_t>(i)) {}
  JsonValue(std::size_t u) : value_(static_cast<std::int64_t>(u)) {}
  JsonValue(std::int64_t i) : value_(i) {}
  JsonValue(const char* s) : value_(std::string(s)) {}
  JsonValue(std::string s) : value_(std::move(s)) {}
  JsonValue(std::string_view s) : value_(std::string(s)) {}

  static JsonValue array() {
    JsonValue v;
    v.value_ = Array{};
    return v;
  }
  static JsonValue object() {
    JsonValue v;
    v.value_ = Object{};
    return v;
  }

  JsonValue& push_back(JsonValue v) {
    std::get<Array>(value_).push_back(std::move(v));
    return *this;
  }

  // Inserts or overwrites; insertion order is what gets serialized.
  JsonValue& set(std::string key, JsonValue v) {
    auto& obj = std::get<Object>(value_);
    for (auto& [k, existing] : obj) {
      if (k == key) {
        existing = std::move(v);
        return *this;
      }
    }
    obj.emplace_back(std::move(key), std::move(v));
    return *this;
  }

  std::string dump(int indent = 0) const {
    std::string out;
    write(out, indent, 0);
    if (indent > 0) out.push_back('\n');
    return out;
  }

private:
  std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Array, Object> value_;

  static void write_escaped(std::string& out, const std::string& s) {
    out.push_back('"');
    for (const char raw : s) {
      const auto ch = static_cast<unsigned char>(raw);
      switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
          if (ch < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
            out += buf;
          } else {
            out.push_back(raw);
          }
      }
    }
    out.push_back('"');
  }

  void newline(std::string& out, int indent, int depth) const {
    if (indent <= 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * depth), ' ');
  }

  void write(std::string& out, int indent, int depth) const {
    if (std::holds_alternative<std::nullptr_t>(value_)) {
      out += "null";
    } else if (const auto* b = std::get_if<bool>(&value_)) {
      out += *b ? "true" : "false";
    } else if (const auto* i = std::get_if<std::int64_t>(&value_)) {
      out += std::to_string(*i);
    } else if (const auto* d = std::get_if<double>(&value_)) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", *d);
      out += buf;
    } else if (const auto* s = std::get_if<std::string>(&value_)) {
      write_escaped(out, *s);
    } else if (const auto* arr = std::get_if<Array>(&value_)) {
      out.push_back('[');
      for (std::size_t i = 0; i < arr->size(); ++i) {
        if (i) out.push_back(',');
        newline(out, indent, depth + 1);
        (*arr)[i].write(out, indent, depth + 1);
      }
      if (!arr->empty()) newline(out, indent, depth);
      out.push_back(']');
    } else if (const auto* obj = std::get_if<Object>(&value_)) {
      out.push_back('{');
      for (std::size_t i = 0; i < obj->size(); ++i) {
        if (i) out.push_back(',');
        newline(out, indent, depth + 1);
        write_escaped(out, (*obj)[i].first);
        out.push_back(':');
        if (indent > 0) out.push_back(' ');
        (*obj)[i].second.write(out, indent, depth + 1);
      }
      if (!obj->empty()) newline(out, indent, depth);
      out.push_back('}');
    }
  }
};

}  // namespace ctseg
