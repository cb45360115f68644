#include "dualmem/hash.hpp"

#include <array>
#include <cstdio>

#include <openssl/sha.h>

namespace dualmem {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> digest{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
  std::string out;
  out.reserve(digest.size() * 2);
  char buf[3];
  for (unsigned char b : digest) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    out.append(buf, 2);
  }
  return out;
}

}  // namespace dualmem
