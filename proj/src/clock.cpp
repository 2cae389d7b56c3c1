#include "tmem/clock.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "tmem/errors.hpp"

namespace tmem {

std::string format_rfc3339(UnixSeconds t) {
    std::time_t tt = static_cast<std::time_t>(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

UnixSeconds parse_rfc3339(const std::string& text) {
    std::tm tm{};
    int y, mo, d, h, mi, s;
    char z = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
        (z != 'Z' && z != 'z')) {
        throw Error(ErrorCode::invalid_field, "timestamp not RFC-3339 UTC: " + text);
    }
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    std::time_t tt = timegm(&tm);
    if (tt == static_cast<std::time_t>(-1)) {
        throw Error(ErrorCode::invalid_field, "timestamp out of range: " + text);
    }
    return static_cast<UnixSeconds>(tt);
}

UnixSeconds SystemClock::now() const {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

} // namespace tmem
