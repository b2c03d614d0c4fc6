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

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridlet::catalog {

enum class FileKind { Data, Script, Paper, Other };

std::string to_string(FileKind k);
std::optional<FileKind> parse_kind(std::string_view s);

/// One catalog entry. Identity within an instance is (lfn, site); the newest
/// mtime wins on re-registration. lfn carries no path separators; location is
/// an absolute site-logical directory path.
struct FileRecord {
    std::string lfn;
    std::string site;
    std::string host;
    std::string location;
    int64_t size_bytes = 0;
    FileKind kind = FileKind::Data;
    std::string collection;  // may be empty
    int64_t mtime = 0;
    std::string origin;  // site that first created the record
    bool synced = false;

    /// Serialized store line, fixed field order:
    /// lfn site host location size_bytes kind collection mtime origin synced
    std::string to_line() const;
    static std::optional<FileRecord> from_line(std::string_view line);

    bool same_content(const FileRecord& o) const;
};

/// nullopt when the record satisfies all FileRecord invariants, else a reason.
std::optional<std::string> validate_record(const FileRecord& rec);

struct LinkRecord {
    std::string lfn;
    std::string user;
    std::string link_path;  // absolute path of the soft link on disk
    int64_t created = 0;

    std::string to_line() const;
    static std::optional<LinkRecord> from_line(std::string_view line);
};

/// Predicate over FileRecord used to pick which central records a site
/// mirrors. Empty filter lists match everything.
struct Subscription {
    std::vector<FileKind> kinds;
    std::vector<std::string> collections;
    std::vector<std::string> sites;

    bool matches(const FileRecord& rec) const;
};

enum class Tier { Central, Site };

struct SpiderReport {
    int64_t added = 0;
    int64_t updated = 0;
    int64_t removed = 0;
    std::vector<std::string> errors;  // unreadable roots, one message each

    bool clean() const { return errors.empty(); }
};

struct SyncReport {
    int64_t pulled = 0;  // records brought down from central
    int64_t pushed = 0;  // data records propagated up to central
};

/// One catalog instance (central or per-site): file records keyed by
/// (lfn, site), link bookkeeping, and the replication watermark. All writes
/// go through this class; concurrent multi-process access must use the
/// service endpoint, never the store file directly.
class Instance {
public:
    Instance(Tier tier, std::string site_name);

    Tier tier() const { return tier_; }
    const std::string& site_name() const { return site_name_; }

    int64_t watermark() const { return watermark_; }
    /// Watermarks never decrease; lower values are ignored.
    void raise_watermark(int64_t w);

    /// Insert or newest-wins replace for the same (lfn, site): the incoming
    /// record is stored iff its mtime >= the stored mtime. Returns the record
    /// that is stored afterwards. Throws Error(InvalidRecord) on malformed
    /// input.
    const FileRecord& register_file(const FileRecord& rec);

    /// Replication upsert. The incoming record wins when its mtime is
    /// strictly newer; on equal mtimes it wins only when it came from the
    /// central tier. Returns true when the stored state changed.
    bool merge_upsert(const FileRecord& rec, bool incoming_from_central);

    bool erase(const std::string& lfn, const std::string& site);

    std::vector<FileRecord> lookup(const std::string& lfn) const;
    const FileRecord* find(const std::string& lfn, const std::string& site) const;
    std::vector<FileRecord> all_records() const;
    std::vector<FileRecord> records_since(int64_t watermark) const;
    size_t size() const { return records_.size(); }

    // ---- link bookkeeping (site tier) ----
    /// Stores a link record; (lfn, user, link_path) is unique, re-adding the
    /// same triple is idempotent.
    void add_link(const LinkRecord& link);
    std::vector<LinkRecord> links_for(const std::string& user) const;  // sorted by created
    std::vector<LinkRecord> all_links() const;
    bool remove_link(const std::string& lfn, const std::string& user,
                     const std::string& link_path);

    // ---- persistence ----
    /// Canonical text dump; load(save(x)) round-trips bit-exactly.
    std::string dump() const;
    std::string dump_links() const;
    void save(const std::string& records_path, const std::string& links_path) const;
    static Instance load(Tier tier, std::string site_name, const std::string& records_path,
                         const std::string& links_path);

private:
    Tier tier_;
    std::string site_name_;
    int64_t watermark_ = 0;
    std::map<std::pair<std::string, std::string>, FileRecord> records_;  // (lfn, site)
    std::map<std::tuple<std::string, std::string, std::string>, LinkRecord> links_;
};

/// Maps a site-logical path to a real filesystem path. Identity by default;
/// the gateway supplies its storage-root mapping.
using PathMapper = std::function<std::string(const std::string&)>;

PathMapper identity_mapper();

/// Walks `roots` (site-logical directory paths) and reconciles the catalog
/// with what is on disk: every regular file gains or refreshes a record,
/// records under the scanned roots whose file vanished are removed.
/// Unreadable roots are reported and skipped; the rest of the scan continues.
SpiderReport spider_scan(Instance& cat, const std::string& site,
                         const std::vector<std::string>& roots, int64_t now,
                         const std::string& host, const PathMapper& realize = identity_mapper());

/// Catalog surface needed by the user-facing link/release commands;
/// implemented in-process below and over the wire by protocol::RemoteCatalog.
class LinkCatalog {
public:
    virtual ~LinkCatalog() = default;
    virtual std::vector<FileRecord> lookup(const std::string& lfn) = 0;
    virtual std::vector<FileRecord> all_records() = 0;
    virtual void add_link(const LinkRecord& link) = 0;
    virtual std::vector<LinkRecord> links_for(const std::string& user) = 0;
    virtual bool remove_link(const std::string& lfn, const std::string& user,
                             const std::string& link_path) = 0;
};

class InProcessLinkCatalog : public LinkCatalog {
public:
    explicit InProcessLinkCatalog(Instance& inst) : inst_(inst) {}
    std::vector<FileRecord> lookup(const std::string& lfn) override { return inst_.lookup(lfn); }
    std::vector<FileRecord> all_records() override { return inst_.all_records(); }
    void add_link(const LinkRecord& link) override { inst_.add_link(link); }
    std::vector<LinkRecord> links_for(const std::string& user) override {
        return inst_.links_for(user);
    }
    bool remove_link(const std::string& lfn, const std::string& user,
                     const std::string& link_path) override {
        return inst_.remove_link(lfn, user, link_path);
    }

private:
    Instance& inst_;
};

struct LinkSelector {
    enum class Kind { Single, List, Substring };
    Kind kind = Kind::Single;
    std::string value;              // Single lfn or the substring
    std::vector<std::string> list;  // List form
};

struct LinkOutcome {
    std::vector<LinkRecord> created;
    std::vector<std::string> skipped;  // "<lfn>: reason" for non-single forms
};

/// Creates soft links in dest_dir for the selected lfns that are locally
/// available (a record for this site exists AND the file is on disk at
/// location/lfn). The single-lfn form throws Error(NotLocallyAvailable) when
/// the file cannot be linked; list/substring forms skip and report instead.
LinkOutcome link_files(LinkCatalog& cat, const std::string& local_site, const LinkSelector& sel,
                       const std::string& dest_dir, const std::string& user, int64_t now,
                       const PathMapper& realize = identity_mapper());

/// All live links of this user, oldest first.
std::vector<LinkRecord> show_linked(LinkCatalog& cat, const std::string& user);

struct ReleaseSelector {
    enum class Kind { Single, Here, All };
    Kind kind = Kind::All;
    std::string value;  // Single: lfn; Here: the directory
};

struct ReleaseOutcome {
    int64_t released = 0;
    std::vector<std::string> warnings;  // broken links etc.
};

/// Deletes matching soft links from disk and their records from the catalog.
/// A record whose link file already vanished is still deleted, with a
/// warning.
ReleaseOutcome release_files(LinkCatalog& cat, const ReleaseSelector& sel,
                             const std::string& user);

/// Local-first search order: the central catalog is consulted only when the
/// local (site) catalog yields nothing.
std::vector<FileRecord> lookup_local_first(LinkCatalog& local, LinkCatalog* central,
                                           const std::string& lfn);

/// Central-catalog access used by replicate(); implemented in-process below
/// and over the wire by protocol::RemoteCatalog.
class CentralPeer {
public:
    virtual ~CentralPeer() = default;
    /// Records with mtime > watermark; as a side effect the peer's own
    /// watermark rises to the given value (never decreases).
    virtual std::vector<FileRecord> records_since(int64_t watermark) = 0;
    virtual std::vector<FileRecord> lookup(const std::string& lfn) = 0;
    virtual void upsert(const FileRecord& rec) = 0;
};

class InProcessPeer : public CentralPeer {
public:
    explicit InProcessPeer(Instance& inst) : inst_(inst) {}
    std::vector<FileRecord> records_since(int64_t watermark) override;
    std::vector<FileRecord> lookup(const std::string& lfn) override;
    void upsert(const FileRecord& rec) override;

private:
    Instance& inst_;
};

/// One bidirectional replication cycle:
///   (a) central records matching `sub` with mtime > local watermark come
///       down, newest-mtime wins and ties favor central;
///   (b) local data records not yet synced go up, unless central already
///       holds a same-or-newer one; either way they are marked synced;
///   (c) both watermarks move to `now`.
/// Throws Error(PeerUnreachable) without advancing the local watermark when
/// the peer cannot be reached.
SyncReport replicate(Instance& local, CentralPeer& central, const Subscription& sub, int64_t now);

}  // namespace gridlet::catalog
