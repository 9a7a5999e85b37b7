#include <array>
#include <string_view>

#include "linkaudit/url_model.hpp"

namespace linkaudit {
namespace {

// Compact subset of the public suffix list: generic and country TLDs seen in
// top-site lists, the common second-level registries, and the hosting
// platforms whose subdomains are handed out to unrelated owners.
constexpr std::array kBundledRules = {
    // generic
    "com", "org", "net", "edu", "gov", "mil", "int", "info", "biz", "name", "pro",
    "aero", "coop", "museum", "mobi", "asia", "tel", "travel", "jobs", "cat",
    "io", "co", "ai", "app", "dev", "me", "tv", "cc", "ly", "fm", "gg", "sh", "to",
    "ws", "la", "is", "im", "ac", "gl", "st", "so", "vc", "xyz", "online", "site",
    "top", "club", "shop", "store", "tech", "blog", "news", "live", "cloud",
    "page", "link", "space", "website", "digital", "media", "network", "agency",
    "design", "global", "world", "today", "company", "group", "center", "email",
    "studio", "social", "life", "zone", "one", "plus", "art", "icu", "vip",
    "work", "wiki", "win", "bid", "download", "porn", "xxx", "adult", "sex",
    "community", "consulting", "solutions", "services", "systems", "software",
    "academy", "education", "events", "games", "health", "energy", "finance",
    "capital", "money", "bank", "insurance", "law", "legal", "dating", "fun",
    "golf", "moe", "ninja", "rocks", "run", "tools", "video", "watch", "music",
    "photo", "photos", "pics", "pictures", "gallery", "fashion", "style", "travel",
    "eu", "us", "uk", "de", "fr", "jp", "cn", "br", "au", "in", "ru", "it", "es",
    "nl", "pl", "ca", "ch", "se", "no", "be", "at", "dk", "fi", "cz", "sk", "hu",
    "ro", "bg", "gr", "pt", "ie", "lt", "lv", "ee", "si", "hr", "rs", "ba", "mk",
    "al", "md", "by", "ua", "kz", "uz", "az", "ge", "am", "tr", "il", "ir", "iq",
    "sa", "ae", "qa", "kw", "om", "bh", "jo", "lb", "eg", "ma", "dz", "tn", "ng",
    "ke", "gh", "tz", "ug", "za", "kr", "kp", "tw", "hk", "mo", "sg", "my", "th",
    "vn", "id", "ph", "pk", "bd", "lk", "np", "mx", "ar", "cl", "pe", "ve", "uy",
    "py", "bo", "ec", "cr", "pa", "gt", "do", "cu", "pr", "nz", "fj", "lu", "li",
    "mt", "cy", "su",
    // second-level registries
    "co.uk", "org.uk", "ac.uk", "gov.uk", "ltd.uk", "plc.uk", "me.uk", "net.uk",
    "sch.uk", "nhs.uk", "police.uk",
    "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp", "ad.jp", "ed.jp", "gr.jp", "lg.jp",
    "com.cn", "net.cn", "org.cn", "gov.cn", "edu.cn", "ac.cn",
    "com.br", "net.br", "org.br", "gov.br", "edu.br", "art.br", "blog.br",
    "com.au", "net.au", "org.au", "edu.au", "gov.au", "asn.au", "id.au",
    "co.in", "net.in", "org.in", "gov.in", "ac.in", "edu.in", "res.in", "firm.in",
    "co.kr", "or.kr", "ne.kr", "go.kr", "ac.kr", "re.kr",
    "com.tw", "org.tw", "gov.tw", "edu.tw", "net.tw", "idv.tw",
    "com.hk", "org.hk", "gov.hk", "edu.hk", "net.hk",
    "com.sg", "org.sg", "gov.sg", "edu.sg", "net.sg",
    "com.my", "org.my", "gov.my", "edu.my", "net.my",
    "co.th", "or.th", "go.th", "ac.th", "in.th",
    "com.vn", "gov.vn", "edu.vn", "net.vn",
    "co.id", "or.id", "go.id", "ac.id", "web.id",
    "com.ph", "gov.ph", "edu.ph",
    "com.pk", "gov.pk", "edu.pk",
    "com.mx", "org.mx", "gob.mx", "edu.mx", "net.mx",
    "com.ar", "org.ar", "gob.ar", "edu.ar", "net.ar",
    "com.co", "gov.co", "edu.co", "org.co", "net.co",
    "com.pe", "gob.pe", "edu.pe",
    "gob.cl",
    "com.ve", "gob.ve",
    "com.ec", "gob.ec",
    "co.za", "org.za", "gov.za", "ac.za", "web.za", "net.za",
    "co.nz", "org.nz", "govt.nz", "ac.nz", "net.nz", "school.nz",
    "com.tr", "org.tr", "gov.tr", "edu.tr", "net.tr", "gen.tr", "bel.tr",
    "com.ua", "org.ua", "gov.ua", "edu.ua", "net.ua", "in.ua",
    "com.ru", "org.ru", "net.ru", "msk.ru", "spb.ru",
    "co.il", "org.il", "gov.il", "ac.il", "net.il",
    "com.sa", "gov.sa", "edu.sa",
    "co.ae", "gov.ae", "ac.ae",
    "com.eg", "gov.eg", "edu.eg",
    "co.ke", "or.ke", "go.ke", "ac.ke",
    "com.ng", "gov.ng", "edu.ng",
    "com.pl", "net.pl", "org.pl", "gov.pl", "edu.pl",
    "co.at", "or.at", "gv.at", "ac.at",
    "com.es", "org.es", "gob.es", "edu.es",
    "com.pt", "gov.pt", "edu.pt",
    "com.gr", "gov.gr", "edu.gr",
    "gouv.fr", "asso.fr", "com.fr",
    "gov.it", "edu.it",
    "com.de",
    "com.cy", "com.mt",
    "com.bd", "gov.bd", "edu.bd",
    "com.lk", "gov.lk", "edu.lk",
    "com.np", "gov.np", "edu.np",
    // shared hosting / CDN platforms
    "github.io", "gitlab.io", "blogspot.com", "wordpress.com", "tumblr.com",
    "herokuapp.com", "azurewebsites.net", "cloudapp.net", "azureedge.net",
    "trafficmanager.net", "appspot.com", "firebaseapp.com", "web.app",
    "netlify.app", "vercel.app", "pages.dev", "workers.dev", "fly.dev",
    "onrender.com", "glitch.me", "surge.sh", "cloudfront.net",
    "s3.amazonaws.com", "elasticbeanstalk.com", "fastly.net", "myshopify.com",
    "wixsite.com", "squarespace.com", "weebly.com", "webflow.io", "readthedocs.io",
    // wildcard registries and their exceptions
    "*.ck", "!www.ck", "*.bn", "*.kh", "*.np", "*.er", "*.fk", "*.jm", "*.mm",
    "*.pg", "*.compute.amazonaws.com",
};

}  // namespace

const SuffixRules& SuffixRules::bundled() {
  static const SuffixRules rules = [] {
    SuffixRules r;
    for (std::string_view rule : kBundledRules) r.add_rule(rule);
    return r;
  }();
  return rules;
}

}  // namespace linkaudit
