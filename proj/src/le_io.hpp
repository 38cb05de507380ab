#pragma once

// Little-endian primitive encoding shared by the binary formats.

#include "globus/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace globus::le {

template <class T>
void put(std::ostream& out, T value) {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
    const U bits = std::bit_cast<U>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, sizeof(T));
}

/// Sequential reader that reports the byte offset of any short read.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    template <class T>
    T get(const char* what) {
        using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                     std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
        unsigned char bytes[sizeof(T)];
        read_raw(reinterpret_cast<char*>(bytes), sizeof(T), what);
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
        return std::bit_cast<T>(bits);
    }

    void read_raw(char* dst, std::size_t n, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != n) {
            throw FormatError(std::string("truncated ") + what, offset_ + got);
        }
        offset_ += n;
    }

    std::uint64_t offset() const noexcept { return offset_; }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

private:
    std::istream& in_;
    std::uint64_t offset_ = 0;
};

}  // namespace globus::le
