#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace tmem {

// Seconds since the Unix epoch, UTC. Serialized as RFC-3339 with second
// precision so golden files stay byte-stable.
using UnixSeconds = std::int64_t;

std::string format_rfc3339(UnixSeconds t);
UnixSeconds parse_rfc3339(const std::string& text);

class Clock {
public:
    virtual ~Clock() = default;
    virtual UnixSeconds now() const = 0;
};

class SystemClock final : public Clock {
public:
    UnixSeconds now() const override;
};

class FixedClock final : public Clock {
public:
    explicit FixedClock(UnixSeconds t) : t_(t) {}
    explicit FixedClock(const std::string& rfc3339) : t_(parse_rfc3339(rfc3339)) {}
    UnixSeconds now() const override { return t_; }
    void set(UnixSeconds t) { t_ = t; }

private:
    UnixSeconds t_;
};

} // namespace tmem
