use std::time::Duration;

use biasaudit::lexicon::translate::{TranslateError, TranslationProvider};
use biasaudit::Language;
use serde_json::{json, Value};

pub const KEY_ENV: &str = "BIASAUDIT_TRANSLATE_KEY";

/// JSON-over-HTTPS translator.
///
/// Sends `{"text": ..., "source_lang": "en", "target_lang": ...}` with a
/// bearer token and reads `{"translation": ...}` from the response.
pub struct HttpTranslator {
    endpoint: String,
    key: String,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(endpoint: &str, key: String) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(Duration::from_secs(30))).build().into();
        HttpTranslator { endpoint: endpoint.to_string(), key, agent }
    }

    pub fn from_env(endpoint: &str) -> Result<Self, String> {
        let key = std::env::var(KEY_ENV).map_err(|_| format!("{KEY_ENV} is not set"))?;
        Ok(Self::new(endpoint, key))
    }
}

impl TranslationProvider for HttpTranslator {
    fn translate(&self, text: &str, target: Language) -> Result<String, TranslateError> {
        let body = json!({ "text": text, "source_lang": "en", "target_lang": target.code() });
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", format!("Bearer {}", self.key))
            .send_json(&body)
            .map_err(|e| TranslateError::Provider(e.to_string()))?;
        let v: Value = resp.body_mut().read_json().map_err(|e| TranslateError::Provider(e.to_string()))?;
        v.get("translation")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| TranslateError::Provider(format!("response lacks a \"translation\" string: {v}")))
    }
}
