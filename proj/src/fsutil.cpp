#include "tutorlens/fsutil.hpp"

#include "tutorlens/error.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace tutorlens {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& target, std::string_view contents,
                       const std::function<void(const fs::path&)>& before_rename) {
    static std::atomic<unsigned long> counter{0};
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    fs::path temp = target;
    temp += ".tmp-" + std::to_string(tid % 100000) + "-" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::StorageFailed, "cannot open " + temp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            fs::remove(temp, ec);
            throw Error(ErrorCode::StorageFailed, "short write to " + temp.string());
        }
    }
    if (before_rename) {
        try {
            before_rename(temp);
        } catch (...) {
            fs::remove(temp, ec);
            throw;
        }
    }
    fs::rename(temp, target, ec);
    if (ec) {
        fs::remove(temp, ec);
        throw Error(ErrorCode::StorageFailed, "cannot rename into " + target.string() + ": " + ec.message());
    }
}

std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace tutorlens
