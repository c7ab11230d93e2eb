// Copyright 2026 The nerprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nerprobe/common.hpp"

#include <cctype>
#include <limits>

namespace nerprobe {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyInput: return "empty-input";
    case ErrorKind::kContextOverflow: return "context-overflow";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kZeroProbability: return "zero-probability";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kInsufficientExamples: return "insufficient-examples";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kUnscored: return "unscored";
    case ErrorKind::kProtocol: return "protocol";
  }
  return "unknown";
}

TransportError::TransportError(std::string endpoint, int attempts, const std::string& detail)
    : Error(ErrorKind::kTransport, endpoint + " unreachable after " + std::to_string(attempts) +
                                       " attempt(s): " + detail),
      endpoint_(std::move(endpoint)),
      attempts_(attempts) {}

std::string_view to_string(NeType type) {
  switch (type) {
    case NeType::kPerson: return "person";
    case NeType::kLocation: return "location";
    case NeType::kOrganisation: return "organisation";
    case NeType::kCorporation: return "corporation";
    case NeType::kGroup: return "group";
    case NeType::kProduct: return "product";
    case NeType::kCreativeWork: return "creative work";
  }
  return "unknown";
}

std::string_view tag_name(NeType type) {
  return type == NeType::kCreativeWork ? std::string_view("creative-work") : to_string(type);
}

std::optional<NeType> parse_ne_type(std::string_view text) {
  std::string key = ascii_lower(trim(text));
  for (char& c : key) {
    if (c == '_' || c == '-') c = ' ';
  }
  if (key == "organization") key = "organisation";
  for (NeType t : kAllNeTypes) {
    if (key == to_string(t)) return t;
  }
  return std::nullopt;
}

NeType parse_ne_type_or_throw(std::string_view text) {
  if (auto t = parse_ne_type(text)) return *t;
  throw Error(ErrorKind::kConfig, "unknown entity type '" + std::string(text) + "'");
}

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  for (const auto& w : split_whitespace(text)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string ascii_upper(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto b = static_cast<unsigned char>(text[i]);
    int extra = b < 0x80 ? 0 : (b >> 5) == 0x6 ? 1 : (b >> 4) == 0xE ? 2 : (b >> 3) == 0x1E ? 3 : -1;
    if (extra < 0 || i + static_cast<std::size_t>(extra) >= text.size()) {
      if (extra != 0) {
        out.push_back(U'\uFFFD');
        ++i;
        continue;
      }
    }
    char32_t cp = extra == 0 ? b : b & (0x3F >> extra);
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      auto cb = static_cast<unsigned char>(text[i + k]);
      if ((cb & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cb & 0x3F);
    }
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

SeededRng::SeededRng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededRng::next_u64() { return engine_(); }

std::size_t SeededRng::uniform_index(std::size_t bound) {
  if (bound == 0) throw Error(ErrorKind::kPrecondition, "uniform_index: bound must be positive");
  const std::uint64_t n = bound;
  // Rejection keeps the draw unbiased and independent of library internals.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

std::vector<std::size_t> SeededRng::sample_indices(std::size_t n, std::size_t k) {
  if (k > n) throw Error(ErrorKind::kPrecondition, "sample_indices: k exceeds n");
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  // Partial Fisher-Yates from the front.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + uniform_index(n - i)]);
  }
  pool.resize(k);
  return pool;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  // FNV-1a over the stage name, mixed with splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace nerprobe
