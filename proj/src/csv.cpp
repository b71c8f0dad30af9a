#include "tutorlens/csv.hpp"

#include "tutorlens/error.hpp"

namespace tutorlens::csv {

std::vector<Record> parse(std::string_view input) {
    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool after_quote = false;   // just closed a quoted field
    bool record_started = false;
    std::size_t i = 0;
    const std::size_t n = input.size();

    auto end_field = [&] {
        current.push_back(std::move(field));
        field.clear();
        after_quote = false;
    };
    auto end_record = [&] {
        if (record_started) {
            end_field();
            records.push_back(std::move(current));
            current.clear();
        }
        record_started = false;
        after_quote = false;
    };

    while (i < n) {
        const char c = input[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && input[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                in_quotes = false;
                after_quote = true;
                ++i;
                continue;
            }
            field.push_back(c);
            ++i;
            continue;
        }
        if (c == ',') {
            record_started = true;
            end_field();
            ++i;
            continue;
        }
        if (c == '\n' || c == '\r') {
            end_record();
            if (c == '\r' && i + 1 < n && input[i + 1] == '\n') ++i;
            ++i;
            continue;
        }
        if (after_quote) {
            throw Error(ErrorCode::MalformedRow, "unexpected character after closing quote", records.size());
        }
        if (c == '"') {
            if (!field.empty()) {
                throw Error(ErrorCode::MalformedRow, "quote inside unquoted field", records.size());
            }
            in_quotes = true;
            record_started = true;
            ++i;
            continue;
        }
        field.push_back(c);
        record_started = true;
        ++i;
    }
    if (in_quotes) {
        throw Error(ErrorCode::MalformedRow, "unterminated quoted field", records.size());
    }
    end_record();
    return records;
}

std::string quote_if_needed(std::string_view field) {
    bool needs = false;
    for (char c : field) {
        if (c == ',' || c == '"' || c == '\n' || c == '\r') {
            needs = true;
            break;
        }
    }
    if (!needs && !field.empty() && (field.front() == ' ' || field.back() == ' ')) needs = true;
    if (!needs) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_record(const Record& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += quote_if_needed(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace tutorlens::csv
