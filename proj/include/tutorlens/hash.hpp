#pragma once

#include <string>
#include <string_view>

namespace tutorlens {

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view bytes);

// Hashes a sequence of fields with length framing so ("ab","c") and
// ("a","bc") never collide.
class FieldHasher {
public:
    FieldHasher& add(std::string_view field);
    [[nodiscard]] std::string hex() const;

private:
    std::string framed_;
};

}  // namespace tutorlens
