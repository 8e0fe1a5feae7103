#pragma once

// The word-frequency workload: tokenizer plus the wc-map / wc-reduce handler
// pair registered into the runtime.

#include <cstdint>
#include <locale>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smr/faas_runtime.hpp"
#include "smr/mapreduce.hpp"

namespace smr {

inline constexpr std::string_view kMapFunction = "wc-map";
inline constexpr std::string_view kReduceFunction = "wc-reduce";

namespace detail {

// Decodes one UTF-8 sequence at text[i]. Returns its length, or 0 for an
// invalid, overlong, surrogate or truncated sequence.
inline std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  auto b = [&](std::size_t k) { return static_cast<unsigned char>(text[i + k]); };
  unsigned char lead = b(0);
  std::size_t len;
  char32_t min;
  if (lead >= 0xC2 && lead <= 0xDF) {
    len = 2, cp = lead & 0x1F, min = 0x80;
  } else if (lead >= 0xE0 && lead <= 0xEF) {
    len = 3, cp = lead & 0x0F, min = 0x800;
  } else if (lead >= 0xF0 && lead <= 0xF4) {
    len = 4, cp = lead & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > text.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    if ((b(k) & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b(k) & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Non-ASCII classification goes through the C library's wide ctype under a
// UTF-8 locale; without one, non-ASCII characters are separators.
class WideClassifier {
 public:
  static const WideClassifier& instance() {
    static const WideClassifier c;
    return c;
  }

  bool is_alnum(char32_t cp) const {
    return facet_ && facet_->is(std::ctype_base::alnum, static_cast<wchar_t>(cp));
  }
  char32_t to_lower(char32_t cp) const {
    return facet_ ? static_cast<char32_t>(facet_->tolower(static_cast<wchar_t>(cp))) : cp;
  }

 private:
  WideClassifier() {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        locale_ = std::locale(name);
        facet_ = &std::use_facet<std::ctype<wchar_t>>(locale_);
        return;
      } catch (const std::runtime_error&) {
      }
    }
  }

  std::locale locale_;
  const std::ctype<wchar_t>* facet_ = nullptr;
};

}  // namespace detail

/// Calls `sink(std::string_view)` for each maximal run of alphanumeric
/// characters, lowercased, in order. Invalid UTF-8 bytes separate tokens.
template <class Sink>
void for_each_token(std::string_view text, Sink&& sink) {
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      sink(std::string_view(token));
      token.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if (c >= 'A' && c <= 'Z')
        token += static_cast<char>(c + ('a' - 'A'));
      else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'))
        token += static_cast<char>(c);
      else
        flush();
      ++i;
      continue;
    }
    char32_t cp = 0;
    std::size_t len = detail::decode_utf8(text, i, cp);
    if (len == 0) {
      flush();
      ++i;
      continue;
    }
    const auto& cls = detail::WideClassifier::instance();
    if (cls.is_alnum(cp))
      detail::append_utf8(token, cls.to_lower(cp));
    else
      flush();
    i += len;
  }
  flush();
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for_each_token(text, [&](std::string_view t) { out.emplace_back(t); });
  return out;
}

struct WordTokenizer {
  template <class Sink>
  void operator()(std::string_view text, Sink&& sink) const {
    for_each_token(text, std::forward<Sink>(sink));
  }
};

inline std::string wc_map_handler(InvocationContext& ctx) {
  auto params = parse_params<MapTaskParams>(ctx.params());
  auto r = run_map_task(params, WordTokenizer{}, ctx.store(), ctx.meter(), &ctx.cancel());
  return nlohmann::json{{"files_processed", r.files_processed},
                        {"tokens_seen", r.tokens_seen}}
      .dump();
}

inline std::string wc_reduce_handler(InvocationContext& ctx) {
  auto params = parse_params<ReduceTaskParams>(ctx.params());
  if (params.reducer_index >= params.num_reducers)
    throw Error(Errc::InvalidArgument, "reducer index out of range");
  auto r = run_reduce_task(params.reducer_index, params.num_mappers, params.job_id,
                           ctx.store(), ctx.meter(), &ctx.cancel());
  return nlohmann::json{{"words_out", r.words_out}, {"total_count", r.total_count}}.dump();
}

/// Registers wc-map and wc-reduce. `limits` supplies cpu share, memory limit
/// and timeout for both; its name and kind are ignored.
inline void register_wordcount(Runtime& runtime, const FunctionSpec& limits = {}) {
  FunctionSpec map = limits;
  map.name = std::string(kMapFunction);
  map.kind = FunctionKind::mapper;
  runtime.register_function(map, wc_map_handler);

  FunctionSpec reduce = limits;
  reduce.name = std::string(kReduceFunction);
  reduce.kind = FunctionKind::reducer;
  runtime.register_function(reduce, wc_reduce_handler);
}

}  // namespace smr
