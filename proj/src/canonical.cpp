#include "cola/canonical.hpp"

#include <charconv>
#include <cmath>

#include <openssl/evp.h>

#include "cola/error.hpp"

namespace cola {

namespace {

void append_canonical(const nlohmann::json& doc, std::string& out) {
  using value_t = nlohmann::json::value_t;
  switch (doc.type()) {
    case value_t::object: {
      // object_t is a std::map, so iteration is already in bytewise key order
      out += '{';
      bool first = true;
      for (const auto& [key, value] : doc.items()) {
        if (!first) out += ',';
        first = false;
        out += nlohmann::json(key).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
        out += ':';
        append_canonical(value, out);
      }
      out += '}';
      break;
    }
    case value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < doc.size(); ++i) {
        if (i > 0) out += ',';
        append_canonical(doc[i], out);
      }
      out += ']';
      break;
    }
    case value_t::number_float: {
      const double v = doc.get<double>();
      if (!std::isfinite(v))
        throw Error(ErrorCode::InvalidArgument, "non-finite number in canonical JSON");
      char buf[64];
      // -0.0 and 0.0 compare equal, hash them equally
      const auto res = std::to_chars(buf, buf + sizeof buf, v == 0.0 ? 0.0 : v);
      out.append(buf, res.ptr);
      break;
    }
    default:
      out += doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
  }
}

}  // namespace

std::string canonical_json(const nlohmann::json& doc) {
  std::string out;
  append_canonical(doc, out);
  return out;
}

Sha256 sha256(std::string_view bytes) {
  Sha256 digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size())
    throw Error(ErrorCode::InvalidArgument, "SHA-256 computation failed");
  return digest;
}

std::string to_hex(const Sha256& digest) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : digest) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

}  // namespace cola
