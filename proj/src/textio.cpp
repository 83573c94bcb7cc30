#include "eegcs/textio.hpp"

#include "eegcs/error.hpp"

#include <charconv>
#include <cmath>

namespace eegcs {

namespace {

[[noreturn]] void fail(const std::string& what, size_t line) {
  if (line > 0) throw ParseError(what, line);
  throw Error(what);
}

}  // namespace

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r' || s[i] == '\n')) ++i;
    size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\r' || s[j] == '\n')) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int decimals) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  std::string s(buf, res.ptr);
  const bool negative = !s.empty() && s[0] == '-';
  if (negative) s.erase(0, 1);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    dot = s.size();
    s += '.';
  }
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  const size_t int_len = dot;
  const size_t keep = int_len + static_cast<size_t>(decimals);
  while (digits.size() <= keep) digits += '0';
  const bool round_up = digits[keep] >= '5';
  digits.resize(keep);
  if (round_up) {
    size_t i = keep;
    while (i > 0) {
      --i;
      if (digits[i] == '9') {
        digits[i] = '0';
      } else {
        ++digits[i];
        break;
      }
      if (i == 0) {
        digits.insert(digits.begin(), '1');
        break;
      }
    }
  }
  const size_t new_int_len = digits.size() - static_cast<size_t>(decimals);
  std::string out = digits.substr(0, new_int_len);
  if (out.empty()) out = "0";
  if (decimals > 0) out += "." + digits.substr(new_int_len);
  const bool is_zero = out.find_first_not_of("0.") == std::string::npos;
  return (negative && !is_zero ? "-" : "") + out;
}

std::int64_t parse_int(std::string_view s, size_t line) {
  s = trim(s);
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("invalid integer '" + std::string(s) + "'", line);
  return v;
}

double parse_double(std::string_view s, size_t line) {
  s = trim(s);
  if (!s.empty() && s[0] == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("invalid number '" + std::string(s) + "'", line);
  return v;
}

}  // namespace eegcs
