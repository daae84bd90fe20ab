use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn generate() -> Self {
        AccountId(uuid::Uuid::new_v4().simple().to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AccountId {
    fn from(s: &str) -> Self {
        AccountId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Role {
    Researcher,
    Manager,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AccountStatus {
    Pending,
    Approved,
    Rejected,
}

impl Role {
    pub fn token(self) -> &'static str {
        match self {
            Role::Researcher => "RESEARCHER",
            Role::Manager => "MANAGER",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "RESEARCHER" => Some(Role::Researcher),
            "MANAGER" => Some(Role::Manager),
            _ => None,
        }
    }
}

impl AccountStatus {
    pub fn token(self) -> &'static str {
        match self {
            AccountStatus::Pending => "PENDING",
            AccountStatus::Approved => "APPROVED",
            AccountStatus::Rejected => "REJECTED",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        match s {
            "PENDING" => Some(AccountStatus::Pending),
            "APPROVED" => Some(AccountStatus::Approved),
            "REJECTED" => Some(AccountStatus::Rejected),
            _ => None,
        }
    }
}

/// Self-declared at signup and confirmed by the manager out of band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Attestation {
    pub identity_confirmed: bool,
    pub developer_account: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub account_id: AccountId,
    pub email: String,
    #[serde(skip_serializing, default)]
    pub password_hash: String,
    pub role: Role,
    pub status: AccountStatus,
    pub attestation: Attestation,
    pub created_at: Timestamp,
}

impl Account {
    pub fn is_approved(&self) -> bool {
        self.status == AccountStatus::Approved
    }

    pub fn is_manager(&self) -> bool {
        self.role == Role::Manager && self.is_approved()
    }
}
