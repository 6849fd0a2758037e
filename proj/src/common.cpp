#include "pvm/common.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace pvm {

namespace {

std::atomic<unsigned> g_default_threads{0};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) throw InputError(fmt::format("invalid calendar date {}-{}-{}", year, month, day));
  if (hour < 0 || hour > 23) throw InputError(fmt::format("invalid hour {}", hour));
  const auto d = sys_days{ymd}.time_since_epoch().count();
  return Timestamp{static_cast<std::int64_t>(d) * 24 + hour};
}

Date date_of(Timestamp ts) { return Date{floor_div(ts.hours, 24)}; }

int hour_of_day(Timestamp ts) { return static_cast<int>(ts.hours - floor_div(ts.hours, 24) * 24); }

Timestamp start_of(Date d) { return Timestamp{d.days * 24}; }

std::string to_string(Date d) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{d.days}}};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

std::string to_string(Timestamp ts) { return fmt::format("{}T{:02d}:00", to_string(date_of(ts)), hour_of_day(ts)); }

Date parse_date(std::string_view text) {
  const auto t = trim(text);
  if (t.size() != 10 || t[4] != '-' || t[7] != '-') throw InputError(fmt::format("malformed date '{}'", t));
  const int y = static_cast<int>(parse_int(t.substr(0, 4), "year"));
  const auto m = static_cast<unsigned>(parse_int(t.substr(5, 2), "month"));
  const auto d = static_cast<unsigned>(parse_int(t.substr(8, 2), "day"));
  return date_of(make_timestamp(y, m, d, 0));
}

Timestamp parse_timestamp(std::string_view text) {
  const auto t = trim(text);
  if (t.size() < 13 || (t[10] != 'T' && t[10] != ' ')) throw InputError(fmt::format("malformed timestamp '{}'", t));
  const Date d = parse_date(t.substr(0, 10));
  const int hour = static_cast<int>(parse_int(t.substr(11, 2), "hour"));
  if (t.size() > 13) {
    if (t.size() < 16 || t[13] != ':') throw InputError(fmt::format("malformed timestamp '{}'", t));
    if (parse_int(t.substr(14, 2), "minute") != 0) throw InputError(fmt::format("timestamp '{}' is not on the hour", t));
  }
  if (hour < 0 || hour > 23) throw InputError(fmt::format("malformed timestamp '{}'", t));
  return start_of(d) + hour;
}

unsigned default_threads() {
  const unsigned configured = g_default_threads.load();
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void set_default_threads(unsigned threads) { g_default_threads.store(threads); }

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = default_threads();
  if (count == 0) return;
  if (threads <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  const auto n = static_cast<std::size_t>(threads) < count ? threads : static_cast<unsigned>(count);
  pool.reserve(n);
  for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master ^ (stream * 0xD1B54A32D192ED03ULL);
  splitmix64(state);
  return splitmix64(state);
}

std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

double parse_double(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InputError(fmt::format("cannot parse {} from '{}'", what, t));
  return value;
}

long long parse_int(std::string_view text, std::string_view what) {
  const auto t = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw InputError(fmt::format("cannot parse {} from '{}'", what, t));
  return value;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path));
  out << content;
  if (!out) throw InputError(fmt::format("write to '{}' failed", path));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace pvm
