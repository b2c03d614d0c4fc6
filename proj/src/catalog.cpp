/*
 * Copyright (c) 2026 The gridlet authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gridlet/catalog.hpp"

#include <fmt/format.h>
#include <sys/stat.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gridlet/errors.hpp"
#include "gridlet/util.hpp"

namespace fs = std::filesystem;

namespace gridlet::catalog {

std::string to_string(FileKind k) {
    switch (k) {
        case FileKind::Data: return "data";
        case FileKind::Script: return "script";
        case FileKind::Paper: return "paper";
        case FileKind::Other: return "other";
    }
    return "other";
}

std::optional<FileKind> parse_kind(std::string_view s) {
    if (s == "data") return FileKind::Data;
    if (s == "script") return FileKind::Script;
    if (s == "paper") return FileKind::Paper;
    if (s == "other") return FileKind::Other;
    return std::nullopt;
}

namespace {

bool field_clean(std::string_view v) {
    for (char c : v)
        if (std::isspace(static_cast<unsigned char>(c)) || c == '\n' || c == '\r') return false;
    return true;
}

// Parses "key=value" tokens of a store line into a map; order is not checked
// on input, only enforced on output.
std::optional<std::map<std::string, std::string>> parse_kv(std::string_view line) {
    std::map<std::string, std::string> kv;
    for (const auto& tok : split_ws(line)) {
        auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0) return std::nullopt;
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

}  // namespace

std::string FileRecord::to_line() const {
    return fmt::format(
        "lfn={} site={} host={} location={} size_bytes={} kind={} collection={} mtime={} "
        "origin={} synced={}",
        lfn, site, host, location, size_bytes, to_string(kind), collection, mtime, origin,
        synced ? 1 : 0);
}

std::optional<FileRecord> FileRecord::from_line(std::string_view line) {
    auto kv = parse_kv(line);
    if (!kv) return std::nullopt;
    FileRecord r;
    r.lfn = (*kv)["lfn"];
    r.site = (*kv)["site"];
    r.host = (*kv)["host"];
    r.location = (*kv)["location"];
    auto size = parse_i64((*kv)["size_bytes"]);
    auto kind = parse_kind((*kv)["kind"]);
    r.collection = (*kv)["collection"];
    auto mtime = parse_i64((*kv)["mtime"]);
    r.origin = (*kv)["origin"];
    auto synced = parse_i64((*kv)["synced"]);
    if (!size || !kind || !mtime || !synced) return std::nullopt;
    r.size_bytes = *size;
    r.kind = *kind;
    r.mtime = *mtime;
    r.synced = *synced != 0;
    if (validate_record(r)) return std::nullopt;
    return r;
}

bool FileRecord::same_content(const FileRecord& o) const {
    return lfn == o.lfn && site == o.site && host == o.host && location == o.location &&
           size_bytes == o.size_bytes && kind == o.kind && collection == o.collection &&
           mtime == o.mtime && origin == o.origin && synced == o.synced;
}

std::optional<std::string> validate_record(const FileRecord& rec) {
    if (rec.lfn.empty()) return "empty lfn";
    if (rec.lfn.find('/') != std::string::npos) return "lfn contains a path separator";
    if (rec.site.empty()) return "empty site";
    if (rec.location.empty() || rec.location[0] != '/') return "location is not an absolute path";
    if (rec.size_bytes < 0) return "negative size";
    if (rec.mtime < 0) return "negative mtime";
    for (const auto* f : {&rec.lfn, &rec.site, &rec.host, &rec.location, &rec.collection,
                          &rec.origin})
        if (!field_clean(*f)) return "field contains whitespace";
    return std::nullopt;
}

std::string LinkRecord::to_line() const {
    return fmt::format("lfn={} user={} link_path={} created={}", lfn, user, link_path, created);
}

std::optional<LinkRecord> LinkRecord::from_line(std::string_view line) {
    auto kv = parse_kv(line);
    if (!kv) return std::nullopt;
    LinkRecord r;
    r.lfn = (*kv)["lfn"];
    r.user = (*kv)["user"];
    r.link_path = (*kv)["link_path"];
    auto created = parse_i64((*kv)["created"]);
    if (r.lfn.empty() || r.user.empty() || r.link_path.empty() || !created) return std::nullopt;
    r.created = *created;
    return r;
}

bool Subscription::matches(const FileRecord& rec) const {
    if (!kinds.empty() && std::find(kinds.begin(), kinds.end(), rec.kind) == kinds.end())
        return false;
    if (!collections.empty() &&
        std::find(collections.begin(), collections.end(), rec.collection) == collections.end())
        return false;
    if (!sites.empty() && std::find(sites.begin(), sites.end(), rec.site) == sites.end())
        return false;
    return true;
}

Instance::Instance(Tier tier, std::string site_name)
    : tier_(tier), site_name_(std::move(site_name)) {}

void Instance::raise_watermark(int64_t w) {
    if (w > watermark_) watermark_ = w;
}

const FileRecord& Instance::register_file(const FileRecord& rec) {
    if (auto why = validate_record(rec))
        throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: {}", *why));
    FileRecord stored = rec;
    if (stored.origin.empty()) stored.origin = stored.site;
    auto key = std::make_pair(stored.lfn, stored.site);
    auto it = records_.find(key);
    if (it == records_.end()) {
        auto [ins, ok] = records_.emplace(key, std::move(stored));
        (void)ok;
        return ins->second;
    }
    if (stored.mtime >= it->second.mtime) it->second = std::move(stored);
    return it->second;
}

bool Instance::merge_upsert(const FileRecord& rec, bool incoming_from_central) {
    if (auto why = validate_record(rec))
        throw Error(ErrorKind::InvalidRecord, fmt::format("invalid record: {}", *why));
    auto key = std::make_pair(rec.lfn, rec.site);
    auto it = records_.find(key);
    if (it == records_.end()) {
        records_.emplace(key, rec);
        return true;
    }
    bool wins = rec.mtime > it->second.mtime ||
                (rec.mtime == it->second.mtime && incoming_from_central);
    if (!wins || it->second.same_content(rec)) return false;
    it->second = rec;
    return true;
}

bool Instance::erase(const std::string& lfn, const std::string& site) {
    return records_.erase({lfn, site}) > 0;
}

std::vector<FileRecord> Instance::lookup(const std::string& lfn) const {
    std::vector<FileRecord> out;
    for (auto it = records_.lower_bound({lfn, ""}); it != records_.end() && it->first.first == lfn;
         ++it)
        out.push_back(it->second);
    return out;
}

const FileRecord* Instance::find(const std::string& lfn, const std::string& site) const {
    auto it = records_.find({lfn, site});
    return it == records_.end() ? nullptr : &it->second;
}

std::vector<FileRecord> Instance::all_records() const {
    std::vector<FileRecord> out;
    out.reserve(records_.size());
    for (const auto& [k, v] : records_) out.push_back(v);
    return out;
}

std::vector<FileRecord> Instance::records_since(int64_t watermark) const {
    std::vector<FileRecord> out;
    for (const auto& [k, v] : records_)
        if (v.mtime > watermark) out.push_back(v);
    return out;
}

void Instance::add_link(const LinkRecord& link) {
    links_.insert_or_assign(std::make_tuple(link.lfn, link.user, link.link_path), link);
}

std::vector<LinkRecord> Instance::links_for(const std::string& user) const {
    std::vector<LinkRecord> out;
    for (const auto& [k, v] : links_)
        if (v.user == user) out.push_back(v);
    std::stable_sort(out.begin(), out.end(),
                     [](const LinkRecord& a, const LinkRecord& b) { return a.created < b.created; });
    return out;
}

std::vector<LinkRecord> Instance::all_links() const {
    std::vector<LinkRecord> out;
    for (const auto& [k, v] : links_) out.push_back(v);
    return out;
}

bool Instance::remove_link(const std::string& lfn, const std::string& user,
                           const std::string& link_path) {
    return links_.erase(std::make_tuple(lfn, user, link_path)) > 0;
}

std::string Instance::dump() const {
    std::string out = fmt::format("#gridlet-catalog tier={} site={} watermark={}\n",
                                  tier_ == Tier::Central ? "central" : "site", site_name_,
                                  watermark_);
    for (const auto& [k, v] : records_) {
        out += v.to_line();
        out.push_back('\n');
    }
    return out;
}

std::string Instance::dump_links() const {
    std::string out = fmt::format("#gridlet-links site={}\n", site_name_);
    for (const auto& [k, v] : links_) {
        out += v.to_line();
        out.push_back('\n');
    }
    return out;
}

void Instance::save(const std::string& records_path, const std::string& links_path) const {
    auto write_file = [](const std::string& path, const std::string& content) {
        fs::create_directories(fs::path(path).parent_path());
        std::string tmp = path + ".tmp";
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        f.close();
        if (!f) throw Error(ErrorKind::LogUnwritable, fmt::format("cannot write {}", path));
        fs::rename(tmp, path);
    };
    write_file(records_path, dump());
    write_file(links_path, dump_links());
}

Instance Instance::load(Tier tier, std::string site_name, const std::string& records_path,
                        const std::string& links_path) {
    Instance inst(tier, std::move(site_name));
    std::ifstream f(records_path, std::ios::binary);
    if (f) {
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            if (line[0] == '#') {
                auto kv = parse_kv(line.substr(1));
                if (kv) {
                    if (auto w = parse_i64((*kv)["watermark"])) inst.watermark_ = *w;
                }
                continue;
            }
            if (auto rec = FileRecord::from_line(line))
                inst.records_.emplace(std::make_pair(rec->lfn, rec->site), *rec);
        }
    }
    std::ifstream lf(links_path, std::ios::binary);
    if (lf) {
        std::string line;
        while (std::getline(lf, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (auto link = LinkRecord::from_line(line)) inst.add_link(*link);
        }
    }
    return inst;
}

PathMapper identity_mapper() {
    return [](const std::string& p) { return p; };
}

namespace {

// Path-component prefix: "/data" covers "/data" and "/data/sub" but not
// "/database".
bool under_root(const std::string& location, const std::string& root) {
    if (location == root) return true;
    std::string prefix = root;
    if (prefix.back() != '/') prefix.push_back('/');
    return starts_with(location, prefix);
}

}  // namespace

SpiderReport spider_scan(Instance& cat, const std::string& site,
                         const std::vector<std::string>& roots, int64_t now, const std::string& host,
                         const PathMapper& realize) {
    (void)now;
    SpiderReport report;
    std::vector<std::string> scanned_roots;
    // (location, lfn) pairs seen on disk during this scan
    std::set<std::pair<std::string, std::string>> seen;

    for (const auto& root : roots) {
        auto norm = normalize_site_path(root);
        if (!norm) {
            report.errors.push_back(fmt::format("{}: not an absolute path", root));
            continue;
        }
        std::string real_root = realize(*norm);
        std::error_code ec;
        if (!fs::is_directory(real_root, ec)) {
            report.errors.push_back(fmt::format("{}: missing or not a directory", *norm));
            continue;
        }
        fs::recursive_directory_iterator it(real_root,
                                            fs::directory_options::skip_permission_denied, ec);
        if (ec) {
            report.errors.push_back(fmt::format("{}: {}", *norm, ec.message()));
            continue;
        }
        scanned_roots.push_back(*norm);
        for (auto end = fs::recursive_directory_iterator(); it != end; it.increment(ec)) {
            if (ec) {
                report.errors.push_back(fmt::format("{}: {}", *norm, ec.message()));
                break;
            }
            // symlink_status so link farms created by link_files are not
            // re-cataloged as data
            std::error_code sec;
            if (!fs::is_regular_file(it->symlink_status(sec)) || sec) continue;
            struct stat st {};
            if (::stat(it->path().c_str(), &st) != 0) continue;
            std::string name = it->path().filename().string();
            std::string real_dir = it->path().parent_path().string();
            // map the real directory back to its site-logical location
            std::string rel = real_dir.substr(real_root.size());
            std::string location = *norm;
            if (!rel.empty()) {
                if (location == "/") location.clear();
                location += rel;
            }
            if (!field_clean(name) || !field_clean(location)) {
                report.errors.push_back(fmt::format("{}: skipped (whitespace in name)", name));
                continue;
            }
            seen.insert({location, name});
            FileRecord rec;
            rec.lfn = name;
            rec.site = site;
            rec.host = host;
            rec.location = location;
            rec.size_bytes = static_cast<int64_t>(st.st_size);
            rec.kind = FileKind::Data;
            rec.mtime = static_cast<int64_t>(st.st_mtime);
            rec.origin = site;
            rec.synced = false;
            const FileRecord* old = cat.find(rec.lfn, rec.site);
            if (old == nullptr) {
                cat.register_file(rec);
                ++report.added;
            } else if (old->mtime <= rec.mtime &&
                       !(old->size_bytes == rec.size_bytes && old->mtime == rec.mtime &&
                         old->location == rec.location && old->host == rec.host)) {
                rec.kind = old->kind;  // keep a curated kind/collection on refresh
                rec.collection = old->collection;
                rec.origin = old->origin;
                cat.register_file(rec);
                ++report.updated;
            }
        }
    }

    // Drop records under successfully scanned roots whose file vanished.
    std::vector<std::pair<std::string, std::string>> to_remove;
    for (const auto& rec : cat.all_records()) {
        if (rec.site != site) continue;
        bool covered = false;
        for (const auto& root : scanned_roots)
            if (under_root(rec.location, root)) {
                covered = true;
                break;
            }
        if (covered && !seen.count({rec.location, rec.lfn}))
            to_remove.emplace_back(rec.lfn, rec.site);
    }
    for (const auto& [lfn, s] : to_remove)
        if (cat.erase(lfn, s)) ++report.removed;
    return report;
}

namespace {

// A file is locally available when a record for this site exists and the file
// is actually on disk at location/lfn. Both checks are required.
const FileRecord* local_record(const std::vector<FileRecord>& recs, const std::string& site) {
    for (const auto& r : recs)
        if (r.site == site) return &r;
    return nullptr;
}

}  // namespace

LinkOutcome link_files(LinkCatalog& cat, const std::string& local_site, const LinkSelector& sel,
                       const std::string& dest_dir, const std::string& user, int64_t now,
                       const PathMapper& realize) {
    if (dest_dir.empty() || dest_dir[0] != '/')
        throw Error(ErrorKind::UsageError, "link destination must be an absolute directory");
    std::error_code ec;
    if (!fs::is_directory(dest_dir, ec))
        throw Error(ErrorKind::UsageError, fmt::format("{} is not a directory", dest_dir));

    std::vector<std::string> lfns;
    switch (sel.kind) {
        case LinkSelector::Kind::Single:
            if (sel.value.empty()) throw Error(ErrorKind::UsageError, "empty lfn");
            lfns.push_back(sel.value);
            break;
        case LinkSelector::Kind::List:
            if (sel.list.empty()) throw Error(ErrorKind::UsageError, "empty lfn list");
            lfns = sel.list;
            break;
        case LinkSelector::Kind::Substring: {
            std::set<std::string> uniq;
            for (const auto& rec : cat.all_records())
                if (rec.site == local_site &&
                    rec.lfn.find(sel.value) != std::string::npos)
                    uniq.insert(rec.lfn);
            lfns.assign(uniq.begin(), uniq.end());
            break;
        }
    }

    LinkOutcome out;
    for (const auto& lfn : lfns) {
        auto fail = [&](const std::string& why) {
            if (sel.kind == LinkSelector::Kind::Single)
                throw Error(ErrorKind::NotLocallyAvailable, fmt::format("{}: {}", lfn, why));
            out.skipped.push_back(fmt::format("{}: {}", lfn, why));
        };
        const FileRecord* rec = local_record(cat.lookup(lfn), local_site);
        if (rec == nullptr) {
            fail("not in the local catalog");
            continue;
        }
        std::string target = realize(join_site_path(rec->location, rec->lfn));
        std::error_code sec;
        if (!fs::is_regular_file(fs::symlink_status(target, sec)) || sec) {
            fail(fmt::format("not on disk at {}", target));
            continue;
        }
        std::string link_path = join_site_path(dest_dir, lfn);
        auto st = fs::symlink_status(link_path, sec);
        if (fs::exists(st)) {
            if (!fs::is_symlink(st)) {
                fail(fmt::format("{} exists and is not a link", link_path));
                continue;
            }
            fs::remove(link_path, sec);  // refresh an existing link
        }
        fs::create_symlink(target, link_path, sec);
        if (sec) {
            fail(fmt::format("cannot create link: {}", sec.message()));
            continue;
        }
        LinkRecord link{lfn, user, link_path, now};
        cat.add_link(link);
        out.created.push_back(link);
    }
    return out;
}

std::vector<LinkRecord> show_linked(LinkCatalog& cat, const std::string& user) {
    return cat.links_for(user);
}

ReleaseOutcome release_files(LinkCatalog& cat, const ReleaseSelector& sel,
                             const std::string& user) {
    ReleaseOutcome out;
    for (const auto& link : cat.links_for(user)) {
        bool match = true;
        if (sel.kind == ReleaseSelector::Kind::Single)
            match = link.lfn == sel.value;
        else if (sel.kind == ReleaseSelector::Kind::Here)
            match = fs::path(link.link_path).parent_path().string() == sel.value;
        if (!match) continue;
        std::error_code ec;
        auto st = fs::symlink_status(link.link_path, ec);
        if (fs::exists(st) || fs::is_symlink(st)) {
            fs::remove(link.link_path, ec);
            if (ec)
                out.warnings.push_back(
                    fmt::format("{}: could not remove link: {}", link.link_path, ec.message()));
        } else {
            out.warnings.push_back(fmt::format("{}: link already gone", link.link_path));
        }
        cat.remove_link(link.lfn, link.user, link.link_path);
        ++out.released;
    }
    return out;
}

std::vector<FileRecord> lookup_local_first(LinkCatalog& local, LinkCatalog* central,
                                           const std::string& lfn) {
    auto out = local.lookup(lfn);
    if (!out.empty() || central == nullptr) return out;
    return central->lookup(lfn);
}

std::vector<FileRecord> InProcessPeer::records_since(int64_t watermark) {
    auto out = inst_.records_since(watermark);
    inst_.raise_watermark(watermark);
    return out;
}

std::vector<FileRecord> InProcessPeer::lookup(const std::string& lfn) {
    return inst_.lookup(lfn);
}

void InProcessPeer::upsert(const FileRecord& rec) {
    inst_.merge_upsert(rec, /*incoming_from_central=*/false);
}

SyncReport replicate(Instance& local, CentralPeer& central, const Subscription& sub, int64_t now) {
    SyncReport report;
    try {
        // (a) central -> local, subscription-filtered, incremental by watermark
        for (const auto& rec : central.records_since(local.watermark())) {
            if (!sub.matches(rec)) continue;
            FileRecord down = rec;
            down.synced = true;  // came from central, so central already knows it
            if (local.merge_upsert(down, /*incoming_from_central=*/true)) ++report.pulled;
        }

        // (b) local -> central: unsynced data records. The peer keeps its own
        // copy on a newer-or-equal mtime, which preserves ties-favor-central.
        for (const auto& rec : local.all_records()) {
            if (rec.kind != FileKind::Data || rec.synced) continue;
            bool push = true;
            for (const auto& existing : central.lookup(rec.lfn)) {
                if (existing.site == rec.site && existing.mtime >= rec.mtime) {
                    push = false;
                    break;
                }
            }
            FileRecord up = rec;
            up.synced = true;
            if (push) {
                central.upsert(up);
                ++report.pushed;
            }
            local.merge_upsert(up, /*incoming_from_central=*/true);  // mark the local copy synced
        }

        // (c) both watermarks advance to now
        central.records_since(now);  // side effect only: raises the peer watermark
        local.raise_watermark(now);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::GatewayDown)
            throw Error(ErrorKind::PeerUnreachable,
                        fmt::format("replication peer unreachable: {}", e.what()));
        throw;
    }
    return report;
}

}  // namespace gridlet::catalog
